use serde::{Deserialize, Serialize};

/// Feature expansion applied before a linear classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMap {
    #[default]
    Raw,
    /// Raw features plus all squares and pairwise products.
    Quadratic,
}

impl FeatureMap {
    pub fn output_dim(self, k: usize) -> usize {
        match self {
            FeatureMap::Raw => k,
            FeatureMap::Quadratic => k + k * (k + 1) / 2,
        }
    }

    pub fn expand_into(self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(x);
        if self == FeatureMap::Quadratic {
            for i in 0..x.len() {
                for j in i..x.len() {
                    out.push(x[i] * x[j]);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_expansion() {
        let mut out = Vec::new();
        FeatureMap::Quadratic.expand_into(&[2.0, 3.0], &mut out);
        assert_eq!(out, vec![2.0, 3.0, 4.0, 6.0, 9.0]);
        assert_eq!(FeatureMap::Quadratic.output_dim(2), 5);
        FeatureMap::Raw.expand_into(&[2.0, 3.0], &mut out);
        assert_eq!(out, vec![2.0, 3.0]);
    }
}
