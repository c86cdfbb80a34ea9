//! Invariant measures on finite-alphabet bases, given as finitely many
//! periodic configurations with rational weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, Window};
use crate::rational::{self, Rational};

/// A configuration of `Z^d` periodic in every axis: `pattern` lists the
/// symbols on `[0, period)` in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub period: Vec<u32>,
    pub pattern: Vec<u32>,
}

impl Configuration {
    pub fn new(period: Vec<u32>, pattern: Vec<u32>) -> Result<Self> {
        let vol: usize = period.iter().map(|&p| p as usize).product();
        if period.is_empty() || period.contains(&0) || vol != pattern.len() {
            return Err(Error::InvalidParameter("pattern must fill the period box".into()));
        }
        Ok(Configuration { period, pattern })
    }

    pub fn constant(dim: usize, symbol: u32) -> Self {
        Configuration { period: vec![1; dim], pattern: vec![symbol] }
    }

    pub fn dim(&self) -> usize {
        self.period.len()
    }

    pub fn at(&self, t: &GroupElement) -> Result<u32> {
        if t.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: t.dim() });
        }
        let i = t
            .coords()
            .iter()
            .zip(&self.period)
            .fold(0usize, |acc, (&c, &p)| acc * p as usize + c.rem_euclid(p as i64) as usize);
        Ok(self.pattern[i])
    }

    /// `(s·y)_t = y_{t+s}`.
    pub fn shifted(&self, s: &GroupElement) -> Result<Configuration> {
        let bx = self.period_box();
        let pattern = bx.iter().map(|t| self.at(&t.add_unchecked(s))).collect::<Result<_>>()?;
        Ok(Configuration { period: self.period.clone(), pattern })
    }

    pub fn has_period(&self, p: &[u32]) -> bool {
        let bx = self.period_box();
        let ok = bx.iter().all(|t| {
            (0..p.len()).all(|i| {
                let mut v = t.coords().to_vec();
                v[i] += p[i] as i64;
                self.at(&GroupElement::new(v).expect("dim >= 1")) == self.at(t)
            })
        });
        ok
    }

    /// Equality as functions on `Z^d`.
    pub fn same_as(&self, other: &Configuration) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let sides: Vec<i64> = self.period.iter().zip(&other.period).map(|(&a, &b)| lcm(a, b) as i64).collect();
        let bx = Window::box_with(&vec![0; self.dim()], &sides);
        let ok = bx.iter().all(|t| self.at(t).ok() == other.at(t).ok());
        ok
    }

    fn period_box(&self) -> Window {
        Window::box_with(&vec![0; self.dim()], &self.period.iter().map(|&p| p as i64).collect::<Vec<_>>())
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub configuration: Configuration,
    #[serde(with = "rational::serde_str")]
    pub weight: Rational,
}

/// `ν = Σ w_k δ_{y_k}`, merged so that no two atoms are the same point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct MeasureModel {
    atoms: Vec<Atom>,
}

impl TryFrom<Vec<Atom>> for MeasureModel {
    type Error = Error;
    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        MeasureModel::new(atoms)
    }
}

impl From<MeasureModel> for Vec<Atom> {
    fn from(m: MeasureModel) -> Self {
        m.atoms
    }
}

impl MeasureModel {
    /// Validates positivity, total mass one and invariance under every
    /// generator of `Z^d`.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let Some(d) = atoms.first().map(|a| a.configuration.dim()) else {
            return Err(Error::NonInvariantMeasure("no atoms".into()));
        };
        let mut merged: Vec<Atom> = Vec::new();
        for a in atoms {
            if a.configuration.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: a.configuration.dim() });
            }
            if a.weight <= Rational::from_integer(0) {
                return Err(Error::NonInvariantMeasure(format!("weight {} is not positive", a.weight)));
            }
            match merged.iter_mut().find(|m| m.configuration.same_as(&a.configuration)) {
                Some(m) => m.weight += a.weight,
                None => merged.push(a),
            }
        }
        let total: Rational = merged.iter().map(|a| a.weight).sum();
        if total != Rational::from_integer(1) {
            return Err(Error::NonInvariantMeasure(format!("total mass {total}")));
        }
        for s in GroupElement::generators(d) {
            for a in &merged {
                let image = a.configuration.shifted(&s)?;
                let w = merged.iter().find(|m| m.configuration.same_as(&image)).map(|m| m.weight);
                if w != Some(a.weight) {
                    return Err(Error::NonInvariantMeasure(format!(
                        "mass of {:?} moves under {s:?}",
                        a.configuration.pattern
                    )));
                }
            }
        }
        Ok(MeasureModel { atoms: merged })
    }

    /// The uniform measure on the orbit of a periodic configuration.
    pub fn orbit(y: &Configuration) -> Result<Self> {
        let mut points: Vec<Configuration> = Vec::new();
        for t in y.period_box().iter() {
            let z = y.shifted(t)?;
            if !points.iter().any(|p| p.same_as(&z)) {
                points.push(z);
            }
        }
        let w = Rational::new(1, points.len() as i64);
        MeasureModel::new(points.into_iter().map(|configuration| Atom { configuration, weight: w }).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].configuration.dim()
    }

    /// `Σ_k w_k f(y_k)`.
    pub fn integrate(&self, mut f: impl FnMut(&Configuration) -> Result<Rational>) -> Result<Rational> {
        let mut total = Rational::from_integer(0);
        for a in &self.atoms {
            total += a.weight * f(&a.configuration)?;
        }
        Ok(total)
    }

    /// Bounds `ess inf` and `ess sup` of `f` under `ν`.
    pub fn essential_range(&self, mut f: impl FnMut(&Configuration) -> Result<Rational>) -> Result<(Rational, Rational)> {
        let values = self.atoms.iter().map(|a| f(&a.configuration)).collect::<Result<Vec<_>>>()?;
        let min = *values.iter().min().expect("atoms");
        let max = *values.iter().max().expect("atoms");
        Ok((min, max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(p: &[u32], pat: &[u32]) -> Configuration {
        Configuration::new(p.to_vec(), pat.to_vec()).unwrap()
    }

    #[test]
    fn configurations_compare_as_functions() {
        assert!(c(&[2], &[0, 1]).same_as(&c(&[4], &[0, 1, 0, 1])));
        assert!(!c(&[2], &[0, 1]).same_as(&c(&[2], &[1, 0])));
        assert!(c(&[2], &[0, 1]).shifted(&GroupElement::scalar(1)).unwrap().same_as(&c(&[2], &[1, 0])));
        assert!(c(&[4], &[0, 1, 0, 1]).has_period(&[2]));
        assert!(!c(&[3], &[0, 0, 1]).has_period(&[2]));
    }

    #[test]
    fn invariance_is_checked() {
        let half = Rational::new(1, 2);
        let ok = MeasureModel::new(vec![
            Atom { configuration: c(&[2], &[0, 1]), weight: half },
            Atom { configuration: c(&[2], &[1, 0]), weight: half },
        ]);
        assert!(ok.is_ok());
        let bad = MeasureModel::new(vec![Atom { configuration: c(&[2], &[0, 1]), weight: Rational::from_integer(1) }]);
        assert!(matches!(bad, Err(Error::NonInvariantMeasure(_))));
        let short = MeasureModel::new(vec![Atom { configuration: Configuration::constant(1, 0), weight: half }]);
        assert!(matches!(short, Err(Error::NonInvariantMeasure(_))));
        let orbit = MeasureModel::orbit(&c(&[3], &[0, 0, 1])).unwrap();
        assert_eq!(orbit.atoms().len(), 3);
        let m = orbit.integrate(|y| Ok(Rational::from_integer(y.at(&GroupElement::scalar(0))? as i64))).unwrap();
        assert_eq!(m, Rational::new(1, 3));
    }

    #[test]
    fn serde_round_trip() {
        let m = MeasureModel::orbit(&c(&[1, 2], &[0, 1])).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"1/2\""));
        assert_eq!(serde_json::from_str::<MeasureModel>(&s).unwrap(), m);
    }
}
