use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use thiserror::Error;

use crate::abe::{abe_encrypt, abe_keygen, AbeCiphertext, AbeError, AbeKey, AbeParams, AccessTree, AttributeSet};
use crate::ledger::TxPayload;
use crate::txgraph::AuditIndex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AccessError {
    #[error("application `{0}` is not registered")]
    UnknownApp(String),
    #[error("resource `{0}` does not exist")]
    UnknownResource(String),
    #[error(transparent)]
    Abe(#[from] AbeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resource {
    pub slice: String,
    pub content: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessGrant {
    pub ciphertext: AbeCiphertext,
    /// Present only on the application's first request.
    pub key: Option<AbeKey>,
}

/// Slices declared in a controller registration (comma separated).
pub fn declared_slices(slice: &str) -> impl Iterator<Item = &str> {
    slice.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Registered application facts: (id_app, category, linked controller ids).
pub fn app_facts(index: &AuditIndex, id_app: &str) -> Option<(String, BTreeSet<String>)> {
    let app_tx = index.apps_with_id(id_app).min_by_key(|id| index.tx(id).map(|(h, _)| h))?;
    let (_, tx) = index.tx(&app_tx)?;
    let TxPayload::App { category, .. } = &tx.payload else { return None };
    let contrs = index
        .contrs_of_app(&app_tx)
        .filter_map(|c| match index.tx(&c).map(|(_, t)| &t.payload) {
            Some(TxPayload::Contr { id_contr, .. }) => Some(id_contr.clone()),
            _ => None,
        })
        .collect();
    Some((category.clone(), contrs))
}

/// AND(id_app, category, controller) for one controller; the controllers
/// become an OR branch when there are several.
pub fn app_policy(id_app: &str, category: &str, controllers: &BTreeSet<String>) -> AccessTree {
    let mut children = vec![AccessTree::leaf(id_app), AccessTree::leaf(category)];
    match controllers.len() {
        0 => {}
        1 => children.push(AccessTree::leaf(controllers.iter().next().unwrap().clone())),
        _ => children.push(AccessTree::or(controllers.iter().cloned().map(AccessTree::leaf).collect())),
    }
    AccessTree::and(children)
}

/// Controllers whose registration declares `slice`.
pub fn slice_controllers(index: &AuditIndex, slice: &str) -> BTreeSet<String> {
    index
        .registered_controllers()
        .filter(|c| {
            index.contrs_with_id(c).any(|id| {
                matches!(index.tx(&id).map(|(_, t)| &t.payload),
                    Some(TxPayload::Contr { slice: s, .. }) if declared_slices(s).any(|x| x == slice))
            })
        })
        .map(str::to_string)
        .collect()
}

/// Network-wide resource store guarded by key-policy ABE.
#[derive(Debug, Clone)]
pub struct AccessControl {
    params: AbeParams,
    resources: BTreeMap<String, Resource>,
    issued: BTreeMap<String, AbeKey>,
}

impl AccessControl {
    pub fn new(params: AbeParams) -> Self {
        Self { params, resources: BTreeMap::new(), issued: BTreeMap::new() }
    }

    pub fn params(&self) -> &AbeParams {
        &self.params
    }

    pub fn add_resource(&mut self, id: &str, resource: Resource) {
        self.resources.insert(id.to_string(), resource);
    }

    pub fn issued_key(&self, id_app: &str) -> Option<&AbeKey> {
        self.issued.get(id_app)
    }

    /// Label attributes a resource is encrypted under for one application.
    pub fn label_for(&self, index: &AuditIndex, id_app: &str, category: &str, resource: &Resource) -> Result<AttributeSet, AbeError> {
        let mut attrs = vec![id_app.to_string(), category.to_string()];
        attrs.extend(slice_controllers(index, &resource.slice));
        AttributeSet::new(attrs)
    }

    pub fn access_control_serve<R: RngCore + ?Sized>(
        &mut self,
        id_app: &str,
        resource_id: &str,
        index: &AuditIndex,
        rng: &mut R,
    ) -> Result<AccessGrant, AccessError> {
        let (category, controllers) =
            app_facts(index, id_app).ok_or_else(|| AccessError::UnknownApp(id_app.to_string()))?;
        let resource = self
            .resources
            .get(resource_id)
            .ok_or_else(|| AccessError::UnknownResource(resource_id.to_string()))?;
        let key = if self.issued.contains_key(id_app) {
            None
        } else {
            let policy = app_policy(id_app, &category, &controllers);
            let k = abe_keygen(&policy, &self.params, id_app.as_bytes())?;
            self.issued.insert(id_app.to_string(), k.clone());
            Some(k)
        };
        let label = self.label_for(index, id_app, &category, resource)?;
        let ciphertext = abe_encrypt(&resource.content, &label, &self.params.public, rng)?;
        Ok(AccessGrant { ciphertext, key })
    }
}
