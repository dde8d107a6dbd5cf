use std::fmt;

use crate::crypto::{
    canonical_encode, ds_verify, hash, Decode, DecodeError, Decoder, Domain, Encode, Encoder,
    GroupElement, GroupParams, HybridCiphertext, Signature,
};

/// Content address of a transaction: H("TX" ‖ canonical_encode(payload)).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TxId(pub [u8; 32]);

impl TxId {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short(&self) -> String {
        hex::encode(&self.0[..6])
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let v = hex::decode(s).ok()?;
        Some(Self(v.try_into().ok()?))
    }
}

impl fmt::Debug for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxId({})", self.short())
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Encode for TxId {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.fixed(&self.0);
    }
}

impl Decode for TxId {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self(dec.fixed()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TxKind {
    Contr,
    App,
    AppContr,
    Switch,
    ContrSwitch,
    FlowAfore,
    FlowAfter,
    Flow,
    Event,
}

impl TxKind {
    pub fn name(self) -> &'static str {
        match self {
            TxKind::Contr => "T_contr",
            TxKind::App => "T_app",
            TxKind::AppContr => "T_app-contr",
            TxKind::Switch => "T_switch",
            TxKind::ContrSwitch => "T_contr-switch",
            TxKind::FlowAfore => "T_flow-afore",
            TxKind::FlowAfter => "T_flow-after",
            TxKind::Flow => "T_flow",
            TxKind::Event => "T_event",
        }
    }

    fn tag(self) -> u8 {
        self as u8 + 1
    }
}

/// The nine ledger record formats, grouped as entity registrations,
/// relationships, flows and events.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TxPayload {
    Contr { id_contr: String, pk_contr: GroupElement, slice: String, sig: Signature },
    App { id_app: String, pk_app: GroupElement, category: String, id_contr: String, sig: Signature },
    AppContr { id_t_app: TxId, id_t_contr: TxId },
    Switch { id_switch: String, pk_switch: GroupElement, slice: String, id_contr: String, com: HybridCiphertext },
    ContrSwitch { id_t_contr: TxId, id_t_switch: TxId },
    FlowAfore { id_flow: String, id_contr: String, pk_app: GroupElement, content: Vec<u8>, sig_flow: Signature },
    FlowAfter { id_flow: String, id_contr: String, id_switch: String, state: Vec<u8> },
    Flow { id_t_flow_afore: TxId, id_t_flow_after: TxId },
    Event { id_event: String, pk_switch: GroupElement, id_contr: String, id_switch: String, event_payload: Vec<u8> },
}

/// Message signed by a controller at registration.
pub fn contr_sig_message(id_contr: &str, slice: &str) -> Vec<u8> {
    canonical_encode(&(id_contr, slice))
}

/// Message signed by an application at registration.
pub fn app_sig_message(id_app: &str, category: &str, id_contr: &str) -> Vec<u8> {
    canonical_encode(&(id_app, category, id_contr))
}

/// Message signed by an application for each flow.
pub fn flow_sig_message(id_flow: &str, id_contr: &str, content: &[u8]) -> Vec<u8> {
    canonical_encode(&(id_flow, id_contr, content))
}

impl TxPayload {
    pub fn kind(&self) -> TxKind {
        match self {
            TxPayload::Contr { .. } => TxKind::Contr,
            TxPayload::App { .. } => TxKind::App,
            TxPayload::AppContr { .. } => TxKind::AppContr,
            TxPayload::Switch { .. } => TxKind::Switch,
            TxPayload::ContrSwitch { .. } => TxKind::ContrSwitch,
            TxPayload::FlowAfore { .. } => TxKind::FlowAfore,
            TxPayload::FlowAfter { .. } => TxKind::FlowAfter,
            TxPayload::Flow { .. } => TxKind::Flow,
            TxPayload::Event { .. } => TxKind::Event,
        }
    }

    pub fn tx_id(&self) -> TxId {
        TxId(hash(Domain::Transaction, &canonical_encode(self)))
    }

    /// Verifies the embedded signature of signed variants; unsigned
    /// variants trivially pass.
    pub fn verify_signature(&self, group: &GroupParams) -> bool {
        match self {
            TxPayload::Contr { id_contr, pk_contr, slice, sig } => {
                ds_verify(group, pk_contr, &contr_sig_message(id_contr, slice), sig)
            }
            TxPayload::App { id_app, pk_app, category, id_contr, sig } => {
                ds_verify(group, pk_app, &app_sig_message(id_app, category, id_contr), sig)
            }
            TxPayload::FlowAfore { id_flow, id_contr, pk_app, content, sig_flow } => {
                ds_verify(group, pk_app, &flow_sig_message(id_flow, id_contr, content), sig_flow)
            }
            _ => true,
        }
    }

    /// (referenced id, required kind) pairs for relationship variants.
    pub fn references(&self) -> Vec<(TxId, TxKind)> {
        match self {
            TxPayload::AppContr { id_t_app, id_t_contr } => {
                vec![(*id_t_app, TxKind::App), (*id_t_contr, TxKind::Contr)]
            }
            TxPayload::ContrSwitch { id_t_contr, id_t_switch } => {
                vec![(*id_t_contr, TxKind::Contr), (*id_t_switch, TxKind::Switch)]
            }
            TxPayload::Flow { id_t_flow_afore, id_t_flow_after } => {
                vec![(*id_t_flow_afore, TxKind::FlowAfore), (*id_t_flow_after, TxKind::FlowAfter)]
            }
            _ => Vec::new(),
        }
    }

    pub fn is_relationship(&self) -> bool {
        matches!(self.kind(), TxKind::AppContr | TxKind::ContrSwitch | TxKind::Flow)
    }

    /// Controller id mentioned by the record, if any.
    pub fn controller(&self) -> Option<&str> {
        match self {
            TxPayload::Contr { id_contr, .. }
            | TxPayload::App { id_contr, .. }
            | TxPayload::Switch { id_contr, .. }
            | TxPayload::FlowAfore { id_contr, .. }
            | TxPayload::FlowAfter { id_contr, .. }
            | TxPayload::Event { id_contr, .. } => Some(id_contr),
            _ => None,
        }
    }
}

impl Encode for TxPayload {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.u8(self.kind().tag());
        match self {
            TxPayload::Contr { id_contr, pk_contr, slice, sig } => {
                enc.str(id_contr).value(pk_contr).str(slice).value(sig);
            }
            TxPayload::App { id_app, pk_app, category, id_contr, sig } => {
                enc.str(id_app).value(pk_app).str(category).str(id_contr).value(sig);
            }
            TxPayload::AppContr { id_t_app, id_t_contr } => {
                enc.value(id_t_app).value(id_t_contr);
            }
            TxPayload::Switch { id_switch, pk_switch, slice, id_contr, com } => {
                enc.str(id_switch).value(pk_switch).str(slice).str(id_contr).value(com);
            }
            TxPayload::ContrSwitch { id_t_contr, id_t_switch } => {
                enc.value(id_t_contr).value(id_t_switch);
            }
            TxPayload::FlowAfore { id_flow, id_contr, pk_app, content, sig_flow } => {
                enc.str(id_flow).str(id_contr).value(pk_app).bytes(content).value(sig_flow);
            }
            TxPayload::FlowAfter { id_flow, id_contr, id_switch, state } => {
                enc.str(id_flow).str(id_contr).str(id_switch).bytes(state);
            }
            TxPayload::Flow { id_t_flow_afore, id_t_flow_after } => {
                enc.value(id_t_flow_afore).value(id_t_flow_after);
            }
            TxPayload::Event { id_event, pk_switch, id_contr, id_switch, event_payload } => {
                enc.str(id_event).value(pk_switch).str(id_contr).str(id_switch).bytes(event_payload);
            }
        }
    }
}

impl Decode for TxPayload {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let tag = dec.u8()?;
        Ok(match tag {
            1 => TxPayload::Contr {
                id_contr: dec.string()?,
                pk_contr: GroupElement::decode_from(dec)?,
                slice: dec.string()?,
                sig: Signature::decode_from(dec)?,
            },
            2 => TxPayload::App {
                id_app: dec.string()?,
                pk_app: GroupElement::decode_from(dec)?,
                category: dec.string()?,
                id_contr: dec.string()?,
                sig: Signature::decode_from(dec)?,
            },
            3 => TxPayload::AppContr { id_t_app: TxId::decode_from(dec)?, id_t_contr: TxId::decode_from(dec)? },
            4 => TxPayload::Switch {
                id_switch: dec.string()?,
                pk_switch: GroupElement::decode_from(dec)?,
                slice: dec.string()?,
                id_contr: dec.string()?,
                com: HybridCiphertext::decode_from(dec)?,
            },
            5 => TxPayload::ContrSwitch { id_t_contr: TxId::decode_from(dec)?, id_t_switch: TxId::decode_from(dec)? },
            6 => TxPayload::FlowAfore {
                id_flow: dec.string()?,
                id_contr: dec.string()?,
                pk_app: GroupElement::decode_from(dec)?,
                content: dec.bytes()?.to_vec(),
                sig_flow: Signature::decode_from(dec)?,
            },
            7 => TxPayload::FlowAfter {
                id_flow: dec.string()?,
                id_contr: dec.string()?,
                id_switch: dec.string()?,
                state: dec.bytes()?.to_vec(),
            },
            8 => TxPayload::Flow { id_t_flow_afore: TxId::decode_from(dec)?, id_t_flow_after: TxId::decode_from(dec)? },
            9 => TxPayload::Event {
                id_event: dec.string()?,
                pk_switch: GroupElement::decode_from(dec)?,
                id_contr: dec.string()?,
                id_switch: dec.string()?,
                event_payload: dec.bytes()?.to_vec(),
            },
            tag => return Err(DecodeError::UnknownTag { what: "transaction", tag }),
        })
    }
}

/// A payload with its content address. The id is stored alongside the
/// payload in blocks and rechecked by chain verification.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub id: TxId,
    pub payload: TxPayload,
}

impl Transaction {
    pub fn new(payload: TxPayload) -> Self {
        Self { id: payload.tx_id(), payload }
    }

    pub fn kind(&self) -> TxKind {
        self.payload.kind()
    }

    pub fn id_matches_payload(&self) -> bool {
        self.id == self.payload.tx_id()
    }
}

impl From<TxPayload> for Transaction {
    fn from(p: TxPayload) -> Self {
        Transaction::new(p)
    }
}

impl Encode for Transaction {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.value(&self.id).value(&self.payload);
    }
}

impl Decode for Transaction {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self { id: TxId::decode_from(dec)?, payload: TxPayload::decode_from(dec)? })
    }
}
