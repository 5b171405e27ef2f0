//! Scenario configuration: the JSON document accepted by the runner.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{make_cartan_type1, make_cartan_type4, make_full, AlgebraDescriptor, AlgebraKind, Sampling};
use crate::controls::ControlDescriptor;
use crate::error::{Error, Result};
use crate::maps::MapDescriptor;
use crate::matrix::{complex_literal, CMatrix, Complex};
use crate::rng::random_unitary;
use crate::stability::ExtractionParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Closure,
    Stability,
    Decompose,
    Example23,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Closure => "closure",
            ScenarioKind::Stability => "stability",
            ScenarioKind::Decompose => "decompose",
            ScenarioKind::Example23 => "example23",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closure" => Ok(ScenarioKind::Closure),
            "stability" => Ok(ScenarioKind::Stability),
            "decompose" => Ok(ScenarioKind::Decompose),
            "example23" => Ok(ScenarioKind::Example23),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraConfig {
    pub kind: AlgebraKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<CMatrix>>,
}

fn required<T: Copy>(v: Option<T>, what: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("algebra kind {kind:?} needs \"{what}\"")))
}

impl AlgebraConfig {
    pub fn build(&self) -> Result<AlgebraDescriptor> {
        let unexpected = |field: &str| Error::Config(format!("field \"{field}\" does not apply to this algebra kind"));
        match self.kind {
            AlgebraKind::Full => {
                if self.m.is_some() || self.k.is_some() || self.basis.is_some() {
                    return Err(unexpected("m/k/basis"));
                }
                make_full(required(self.n, "n", "full")?)
            }
            AlgebraKind::CartanI => {
                if self.k.is_some() || self.basis.is_some() {
                    return Err(unexpected("k/basis"));
                }
                make_cartan_type1(required(self.n, "n", "cartan1")?, required(self.m, "m", "cartan1")?)
            }
            AlgebraKind::CartanIV => {
                if self.n.is_some() || self.m.is_some() || self.basis.is_some() {
                    return Err(unexpected("n/m/basis"));
                }
                make_cartan_type4(required(self.k, "k", "cartan4")?)
            }
            AlgebraKind::Custom => {
                if self.n.is_some() || self.m.is_some() || self.k.is_some() {
                    return Err(unexpected("n/m/k"));
                }
                let basis = self.basis.clone().ok_or_else(|| Error::Config("custom algebra needs \"basis\"".into()))?;
                AlgebraDescriptor::custom(basis)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    ExactUv,
    Transpose,
    Zero,
    Truncated,
    BallNoise,
}

/// Map fragment. For `exact_uv`, `U` and `V` default to random unitaries
/// drawn from `unitary_seed` when that is given, and to identities otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub variant: MapKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<CMatrix>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<CMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<Box<MapConfig>>,
}

impl MapConfig {
    pub fn new(variant: MapKind) -> Self {
        Self {
            variant,
            radius: None,
            alpha: None,
            p: None,
            support_radius: None,
            seed: None,
            u: None,
            v: None,
            unitary_seed: None,
            inner: None,
        }
    }

    fn inner_map(&self, domain: &Arc<AlgebraDescriptor>) -> Result<MapDescriptor> {
        self.inner
            .as_ref()
            .ok_or_else(|| Error::Config(format!("map variant {:?} needs \"inner\"", self.variant)))?
            .build(domain)
    }

    pub fn build(&self, domain: &Arc<AlgebraDescriptor>) -> Result<MapDescriptor> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| Error::Config(format!("map variant {:?} needs \"{what}\"", self.variant)))
        };
        match self.variant {
            MapKind::ExactUv => {
                let (rows, cols) = domain.ambient();
                let u = match (&self.u, self.unitary_seed) {
                    (Some(u), _) => u.clone(),
                    (None, Some(s)) => random_unitary(rows, s),
                    (None, None) => CMatrix::identity(rows),
                };
                let v = match (&self.v, self.unitary_seed) {
                    (Some(v), _) => v.clone(),
                    (None, Some(s)) => random_unitary(cols, s.wrapping_add(1)),
                    (None, None) => CMatrix::identity(cols),
                };
                MapDescriptor::exact_uv(domain.clone(), u, v)
            }
            MapKind::Transpose => MapDescriptor::transpose(domain.clone()),
            MapKind::Zero => MapDescriptor::zero(domain.clone()),
            MapKind::Truncated => MapDescriptor::truncated(self.inner_map(domain)?, self.radius.unwrap_or(1.0)),
            MapKind::BallNoise => MapDescriptor::ball_noise(
                self.inner_map(domain)?,
                need(self.alpha, "alpha")?,
                need(self.p, "p")?,
                need(self.support_radius, "support_radius")?,
                self.seed.unwrap_or(0),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub closure: f64,
    pub hom: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { closure: 1e-10, hom: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlDescriptor>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub extraction: ExtractionParams,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, with = "optional_complex", skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Complex>,
}

mod optional_complex {
    use super::{complex_literal, Complex};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &Option<Complex>, s: S) -> Result<S::Ok, S::Error> {
        match z {
            Some(z) => complex_literal::serialize(z, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Complex>, D::Error> {
        Ok(Option::<[f64; 2]>::deserialize(d)?.map(|[re, im]| Complex::new(re, im)))
    }
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            algebra: None,
            map: None,
            control: None,
            sampling: Sampling::default(),
            extraction: ExtractionParams::default(),
            tolerances: Tolerances::default(),
            lambda: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the scalar fields and which fragments the scenario needs.
    /// Fragments are built (and so fully validated) by the runner.
    pub fn validate(&self) -> Result<()> {
        let s = &self.sampling;
        if s.trials < 1 {
            return Err(Error::Config("sampling.trials must be at least 1".into()));
        }
        if !(s.scale > 0.0 && s.scale.is_finite()) {
            return Err(Error::Config(format!("sampling.scale must be positive, got {}", s.scale)));
        }
        let e = &self.extraction;
        if !(e.tol > 0.0 && e.tol.is_finite()) || e.max_n < 1 {
            return Err(Error::Config("extraction needs tol > 0 and max_n ≥ 1".into()));
        }
        let t = &self.tolerances;
        if !(t.closure >= 0.0 && t.hom >= 0.0) {
            return Err(Error::Config("tolerances must be nonnegative".into()));
        }
        let needs_algebra = self.scenario != ScenarioKind::Decompose;
        if needs_algebra && self.algebra.is_none() {
            return Err(Error::Config(format!("scenario {} needs \"algebra\"", self.scenario.name())));
        }
        match self.scenario {
            ScenarioKind::Stability | ScenarioKind::Example23 if self.map.is_none() => {
                Err(Error::Config(format!("scenario {} needs \"map\"", self.scenario.name())))
            }
            ScenarioKind::Decompose if self.lambda.is_none() => {
                Err(Error::Config("scenario decompose needs \"lambda\"".into()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_example23() {
        let cfg = ScenarioConfig::from_json(
            r#"{"scenario":"example23","algebra":{"kind":"full","n":2},"map":{"variant":"transpose"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Example23);
        assert_eq!(cfg.sampling, Sampling::default());
        let a = Arc::new(cfg.algebra.unwrap().build().unwrap());
        assert_eq!(a.dim(), 4);
        assert!(cfg.map.unwrap().build(&a).unwrap().is_exact());
    }

    #[test]
    fn parses_nested_map_and_control() {
        let cfg = ScenarioConfig::from_json(
            r#"{"scenario":"stability","algebra":{"kind":"cartan1","n":2,"m":3},
                "map":{"variant":"ball_noise","alpha":0.1,"p":0.5,"support_radius":4,"seed":3,
                       "inner":{"variant":"exact_uv","unitary_seed":9}},
                "control":{"variant":"sum","parts":[{"variant":"constant","c":1},{"variant":"power","alpha":0.2,"p":0.5}]},
                "sampling":{"trials":5,"seed":2},"extraction":{"max_n":40}}"#,
        )
        .unwrap();
        assert_eq!(cfg.sampling, Sampling::new(5, 2, 1.0));
        assert_eq!(cfg.extraction, ExtractionParams { tol: 1e-12, max_n: 40 });
        let a = Arc::new(cfg.algebra.unwrap().build().unwrap());
        let h = cfg.map.unwrap().build(&a).unwrap();
        assert_eq!(crate::maps::MatrixMap::homogeneous_beyond(&h), Some(4.0));
    }

    #[test]
    fn rejects_malformed_configs() {
        for bad in [
            r#"{"scenario":"nope"}"#,
            r#"{"scenario":"closure"}"#,
            r#"{"scenario":"closure","algebra":{"kind":"full","n":2},"extra":1}"#,
            r#"{"scenario":"closure","algebra":{"kind":"full","n":2},"sampling":{"trials":0}}"#,
            r#"{"scenario":"closure","algebra":{"kind":"full","n":2},"sampling":{"scale":-1}}"#,
            r#"{"scenario":"stability","algebra":{"kind":"full","n":2}}"#,
            r#"{"scenario":"decompose"}"#,
            r#"{"scenario":"closure","algebra":{"kind":"full","n":2},"control":{"variant":"power","alpha":1}}"#,
            "not json",
        ] {
            assert!(matches!(ScenarioConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
        let a = AlgebraConfig { kind: AlgebraKind::CartanIV, n: None, m: None, k: None, basis: None };
        assert!(matches!(a.build(), Err(Error::Config(_))));
    }

    #[test]
    fn echo_round_trips() {
        let text = r#"{"scenario":"decompose","lambda":[1,0]}"#;
        let cfg = ScenarioConfig::from_json(text).unwrap();
        let again = ScenarioConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.lambda, Some(Complex::new(1.0, 0.0)));
    }
}
