use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChainStrategy, CoeError};
use crate::providers::mock::{EchoGenerator, FailingProvider, OracleClassifier, OracleGenerator};
use crate::providers::{Classifier, DecodeParams, ExpertRole, Generator, HttpProvider};
use crate::tasks::Orientation;

fn default_timeout_secs() -> u64 {
    60
}

fn default_max_in_flight() -> usize {
    8
}

fn one() -> f64 {
    1.0
}

/// A remote expert speaking the JSON protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpEndpoint {
    pub url: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// Overrides the chain's decode parameters for this generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decode: Option<DecodeParams>,
}

/// An in-process expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mock", rename_all = "snake_case")]
pub enum MockEndpoint {
    Echo,
    OracleGenerator {
        success_rate: f64,
    },
    OracleClassifier {
        #[serde(default = "one")]
        accuracy: f64,
        #[serde(default)]
        seed: u64,
    },
    Failing {
        #[serde(default)]
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EndpointSpec {
    Http(HttpEndpoint),
    Mock(MockEndpoint),
}

/// Strategy, experts and decoding for one chain run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub strategy: ChainStrategy,
    #[serde(default)]
    pub endpoints: BTreeMap<ExpertRole, EndpointSpec>,
    #[serde(default)]
    pub decode: DecodeParams,
    /// Orientation of generated actions. `n/a` defers to each sample's own
    /// orientation.
    #[serde(default = "not_applicable")]
    pub target_orientation: Orientation,
}

fn not_applicable() -> Orientation {
    Orientation::NotApplicable
}

impl ChainConfig {
    pub fn new(strategy: ChainStrategy) -> Self {
        ChainConfig {
            strategy,
            endpoints: BTreeMap::new(),
            decode: DecodeParams::default(),
            target_orientation: Orientation::NotApplicable,
        }
    }

    /// Checks that the endpoints are exactly the strategy's roles, plus an
    /// optional judge, and that each endpoint can serve its role.
    pub fn validate(&self) -> Result<(), CoeError> {
        self.decode.validate().map_err(CoeError::Decode)?;
        let required = self.strategy.required_roles();
        for &role in required {
            if !self.endpoints.contains_key(&role) {
                return Err(CoeError::MissingRole {
                    strategy: self.strategy,
                    role,
                });
            }
        }
        for (&role, spec) in &self.endpoints {
            if role != ExpertRole::Judge && !required.contains(&role) {
                return Err(CoeError::UnexpectedRole {
                    strategy: self.strategy,
                    role,
                });
            }
            match spec {
                EndpointSpec::Http(h) => {
                    if let Some(d) = &h.decode {
                        if role.is_classifier() {
                            return Err(CoeError::RoleKind {
                                role,
                                message: "decode parameters apply to generators only".into(),
                            });
                        }
                        d.validate().map_err(CoeError::Decode)?;
                    }
                    if h.max_in_flight == 0 {
                        return Err(CoeError::RoleKind {
                            role,
                            message: "max_in_flight must be positive".into(),
                        });
                    }
                }
                EndpointSpec::Mock(m) => {
                    let ok = match m {
                        MockEndpoint::Echo | MockEndpoint::OracleGenerator { .. } => role.is_generator(),
                        MockEndpoint::OracleClassifier { .. } => role.is_classifier(),
                        MockEndpoint::Failing { .. } => true,
                    };
                    if !ok {
                        return Err(CoeError::RoleKind {
                            role,
                            message: format!("mock {m:?} cannot serve this role"),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

struct GeneratorEntry {
    backend: Arc<dyn Generator>,
    decode: Option<DecodeParams>,
}

/// Resolved experts by role.
#[derive(Default, Clone)]
pub struct Experts {
    generators: BTreeMap<ExpertRole, Arc<GeneratorEntry>>,
    classifiers: BTreeMap<ExpertRole, Arc<dyn Classifier>>,
}

impl Experts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_generator(self, role: ExpertRole, backend: Arc<dyn Generator>) -> Self {
        self.with_generator_decode(role, backend, None)
    }

    pub fn with_generator_decode(
        mut self,
        role: ExpertRole,
        backend: Arc<dyn Generator>,
        decode: Option<DecodeParams>,
    ) -> Self {
        self.generators
            .insert(role, Arc::new(GeneratorEntry { backend, decode }));
        self
    }

    pub fn with_classifier(mut self, role: ExpertRole, backend: Arc<dyn Classifier>) -> Self {
        self.classifiers.insert(role, backend);
        self
    }

    /// Instantiates every endpoint of a validated config. HTTP endpoints
    /// that serve several roles share nothing; each role gets its own
    /// client and in-flight cap.
    pub fn from_config(cfg: &ChainConfig) -> Result<Self, CoeError> {
        cfg.validate()?;
        let mut experts = Experts::new();
        for (&role, spec) in &cfg.endpoints {
            match spec {
                EndpointSpec::Http(h) => {
                    let client = Arc::new(HttpProvider::new(
                        &h.url,
                        Duration::from_secs(h.timeout_secs),
                        h.max_in_flight,
                    )?);
                    experts = if role.is_generator() {
                        experts.with_generator_decode(role, client, h.decode)
                    } else {
                        experts.with_classifier(role, client)
                    };
                }
                EndpointSpec::Mock(m) => {
                    experts = match m {
                        MockEndpoint::Echo => experts.with_generator(role, Arc::new(EchoGenerator)),
                        MockEndpoint::OracleGenerator { success_rate } => {
                            experts.with_generator(role, Arc::new(OracleGenerator::new(*success_rate)))
                        }
                        MockEndpoint::OracleClassifier { accuracy, seed } => {
                            experts.with_classifier(role, Arc::new(OracleClassifier::noisy(*accuracy, *seed)))
                        }
                        MockEndpoint::Failing { message } => {
                            let p = Arc::new(FailingProvider {
                                message: message.clone(),
                            });
                            if role.is_generator() {
                                experts.with_generator(role, p)
                            } else {
                                experts.with_classifier(role, p)
                            }
                        }
                    };
                }
            }
        }
        Ok(experts)
    }

    pub(super) fn generator(&self, role: ExpertRole) -> Result<(&dyn Generator, Option<DecodeParams>), CoeError> {
        self.generators
            .get(&role)
            .map(|e| (e.backend.as_ref(), e.decode))
            .ok_or(CoeError::NoExpert(role))
    }

    pub(super) fn classifier(&self, role: ExpertRole) -> Result<&dyn Classifier, CoeError> {
        self.classifiers
            .get(&role)
            .map(|c| c.as_ref())
            .ok_or(CoeError::NoExpert(role))
    }

    pub fn judge(&self) -> Option<&dyn Classifier> {
        self.classifiers.get(&ExpertRole::Judge).map(|c| c.as_ref())
    }
}
