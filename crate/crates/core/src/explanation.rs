use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DbaTab,
    DbaAtt,
    LimeTab,
    LimeAtt,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::DbaTab, Method::LimeTab, Method::DbaAtt, Method::LimeAtt];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::DbaTab => "dba-tab",
            Method::DbaAtt => "dba-att",
            Method::LimeTab => "lime-tab",
            Method::LimeAtt => "lime-att",
        }
    }

    pub fn is_attribute_based(self) -> bool {
        matches!(self, Method::DbaAtt | Method::LimeAtt)
    }

    pub fn is_dba(self) -> bool {
        matches!(self, Method::DbaTab | Method::DbaAtt)
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method '{s}' (expected dba-tab, dba-att, lime-tab or lime-att)"))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitted linear surrogate `g(x) = x'beta + beta_0` and the context it was
/// fitted in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Explanation<F: Scalar> {
    pub method: Method,
    pub feature_names: Vec<String>,
    pub coefficients: Vec<F>,
    pub intercept: F,
    /// Closest detected boundary point (DBA only).
    pub boundary_point: Option<Vec<F>>,
    /// Opposite-class training point whose segment produced the boundary point.
    pub bisected_point: Option<Vec<F>>,
    pub chosen_r: Option<F>,
    pub sample_size: usize,
    /// Sign accuracy of the surrogate on its own sample (DBA).
    pub fidelity: Option<F>,
    /// Weighted R^2 of the surrogate on its own sample (LIME).
    pub r2: Option<F>,
    pub class_balance: F,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl<F: Scalar> Explanation<F> {
    pub fn decision(&self, x: &[F]) -> F {
        linalg::dot(&self.coefficients, x) + self.intercept
    }

    /// Unit vector along the coefficients, `None` if they vanish.
    pub fn unit_direction(&self) -> Option<Vec<F>> {
        let n = linalg::norm(&self.coefficients);
        (n > F::zero()).then(|| linalg::scale(&self.coefficients, F::one() / n))
    }

    /// Feature names ordered by decreasing `|coefficient|`.
    pub fn ranked_features(&self) -> Vec<(String, F)> {
        let mut out: Vec<(String, F)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.coefficients.iter().copied())
            .collect();
        out.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap_or(std::cmp::Ordering::Equal));
        out
    }
}
