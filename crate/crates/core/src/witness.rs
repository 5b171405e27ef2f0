use serde::Serialize;

use crate::matrix::{complex_pair, CMatrix, Complex};

/// Inputs that reproduce a failed check in isolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub check: String,
    pub residual: f64,
    pub threshold: f64,
    pub inputs: Vec<NamedMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scalar: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedMatrix {
    pub name: String,
    pub value: CMatrix,
}

impl Witness {
    pub fn new(check: &str, residual: f64, threshold: f64) -> Self {
        Self { check: check.to_string(), residual, threshold, inputs: Vec::new(), scalar: None }
    }

    pub fn input(mut self, name: &str, value: &CMatrix) -> Self {
        self.inputs.push(NamedMatrix { name: name.to_string(), value: value.clone() });
        self
    }

    pub fn scalar(mut self, z: Complex) -> Self {
        self.scalar = Some(complex_pair(z));
        self
    }
}
