//! Plant and controller models, their file format, and random generation.
//!
//! Disk-algebra plants use the discrete-time `z` convention: stable means
//! analytic on the closed unit disk, so poles must lie outside it. Plants over
//! the other algebras are given through their coprime factors.

mod factors;
mod format;
mod random;
mod statespace;

use serde::Serialize;

pub use factors::{
    Bezout, CoprimeFactors, FactorBlock, Graph, Realization, Residuals, SampledBlock, Stacked, SymBlock,
};
pub use format::{parse_plant, serialize_plant};
pub use random::{random_plant, random_stable_plant};
pub use statespace::{choose_shift, realize_rational_mobius, realize_scalar, RationalEntry, StateSpace};

use crate::config::CIRCLE_EXCLUSION;
use crate::error::{Error, Result};
use crate::freqdomain::{AlgebraTag, GridPoint, MatrixSampler};
use crate::linalg::{self, CMat};
use crate::poly;
use crate::symbolic::{Element, ExpPoly};

type RealizeFn<'a> = Box<dyn Fn(f64) -> Result<StateSpace> + 'a>;

/// Entrywise quotient of two almost-periodic polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPolyEntry {
    pub num: ExpPoly,
    pub den: ExpPoly,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlantBody {
    StateSpace(StateSpace),
    Rational(Vec<Vec<RationalEntry>>),
    ExpPolyQuotient(Vec<Vec<ExpPolyEntry>>),
    Factors(CoprimeFactors),
}

impl PlantBody {
    pub fn kind(&self) -> &'static str {
        match self {
            PlantBody::StateSpace(_) => "state_space",
            PlantBody::Rational(_) => "rational",
            PlantBody::ExpPolyQuotient(_) => "exp_poly",
            PlantBody::Factors(_) => "coprime",
        }
    }
}

/// A `p x m` plant (or controller) over one of the four algebras.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub algebra: AlgebraTag,
    pub p: usize,
    pub m: usize,
    pub body: PlantBody,
}

/// Size and pole summary, used in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantSummary {
    pub algebra: String,
    pub kind: String,
    pub p: usize,
    pub m: usize,
    pub order: Option<usize>,
}

impl PlantModel {
    pub fn new(algebra: AlgebraTag, p: usize, m: usize, body: PlantBody) -> Result<Self> {
        let plant = PlantModel { algebra, p, m, body };
        plant.validate()?;
        Ok(plant)
    }

    pub fn state_space(ss: StateSpace) -> Result<Self> {
        let (p, m) = (ss.outputs(), ss.inputs());
        Self::new(AlgebraTag::Disk, p, m, PlantBody::StateSpace(ss))
    }

    pub fn rational(entries: Vec<Vec<RationalEntry>>) -> Result<Self> {
        let p = entries.len();
        let m = entries.first().map(|r| r.len()).unwrap_or(0);
        Self::new(AlgebraTag::Disk, p, m, PlantBody::Rational(entries))
    }

    /// Constant matrix gain.
    pub fn gain(d: CMat) -> Result<Self> {
        Self::state_space(StateSpace::gain(d))
    }

    /// Scalar constant.
    pub fn constant(k: f64) -> Self {
        Self::gain(linalg::scalar(linalg::c(k, 0.0))).expect("1x1 gain is valid")
    }

    /// The plant `k P`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        let kc = linalg::c(k, 0.0);
        let body = match &self.body {
            PlantBody::StateSpace(ss) => PlantBody::StateSpace(StateSpace {
                c: &ss.c * kc,
                d: &ss.d * kc,
                ..ss.clone()
            }),
            PlantBody::Rational(entries) => PlantBody::Rational(
                entries
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| RationalEntry {
                                num: poly::scale(&e.num, kc),
                                den: e.den.clone(),
                            })
                            .collect()
                    })
                    .collect(),
            ),
            PlantBody::ExpPolyQuotient(entries) => PlantBody::ExpPolyQuotient(
                entries
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| ExpPolyEntry {
                                num: e.num.scale(kc),
                                den: e.den.clone(),
                            })
                            .collect()
                    })
                    .collect(),
            ),
            PlantBody::Factors(_) => {
                return Err(Error::Unsupported("scaling a plant given by coprime factors".into()))
            }
        };
        Self::new(self.algebra, self.p, self.m, body)
    }

    pub fn from_factors(algebra: AlgebraTag, factors: CoprimeFactors) -> Result<Self> {
        let (p, m) = (factors.outputs(), factors.inputs());
        Self::new(algebra, p, m, PlantBody::Factors(factors))
    }

    pub fn factors(&self) -> Option<&CoprimeFactors> {
        match &self.body {
            PlantBody::Factors(f) => Some(f),
            _ => None,
        }
    }

    pub fn summary(&self) -> PlantSummary {
        PlantSummary {
            algebra: self.algebra.to_string(),
            kind: self.body.kind().to_string(),
            p: self.p,
            m: self.m,
            order: match &self.body {
                PlantBody::StateSpace(ss) => Some(ss.order()),
                _ => None,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.algebra.validate()?;
        if self.p == 0 || self.m == 0 {
            return Err(Error::Validation("plant dimensions must be positive".into()));
        }
        let dims = |r: usize, c: usize, what: &str| -> Result<()> {
            if (r, c) != (self.p, self.m) {
                return Err(Error::Validation(format!(
                    "{what} is {r}x{c}, declared {}x{}",
                    self.p, self.m
                )));
            }
            Ok(())
        };
        let disk_only = |kind: &str| -> Result<()> {
            if self.algebra != AlgebraTag::Disk {
                return Err(Error::Validation(format!(
                    "{kind} bodies describe disk-algebra plants; use coprime factors for {}",
                    self.algebra
                )));
            }
            Ok(())
        };
        match &self.body {
            PlantBody::StateSpace(ss) => {
                disk_only("state_space")?;
                dims(ss.outputs(), ss.inputs(), "realization")?;
                check_poles(&ss.poles()).map_err(as_validation)?;
            }
            PlantBody::Rational(entries) => {
                disk_only("rational")?;
                let cols = entries.first().map(|r| r.len()).unwrap_or(0);
                if entries.iter().any(|r| r.len() != cols) {
                    return Err(Error::Validation("ragged rational matrix".into()));
                }
                dims(entries.len(), cols, "rational matrix")?;
                for e in entries.iter().flatten() {
                    if e.den.last().is_none_or(|c| *c == linalg::ZERO) {
                        return Err(Error::Validation(
                            "denominator leading coefficient must be nonzero".into(),
                        ));
                    }
                    if e.num.is_empty() {
                        return Err(Error::Validation("empty numerator".into()));
                    }
                    check_poles(&poly::roots(&e.den)).map_err(as_validation)?;
                }
            }
            PlantBody::ExpPolyQuotient(entries) => {
                if !matches!(self.algebra, AlgebraTag::Ap | AlgebraTag::Cd) {
                    return Err(Error::Validation(format!(
                        "exp_poly bodies need the ap or cd algebra, not {}",
                        self.algebra
                    )));
                }
                let cols = entries.first().map(|r| r.len()).unwrap_or(0);
                if entries.iter().any(|r| r.len() != cols) {
                    return Err(Error::Validation("ragged exp_poly matrix".into()));
                }
                dims(entries.len(), cols, "exp_poly matrix")?;
                if entries.iter().flatten().any(|e| e.den.terms().is_empty()) {
                    return Err(Error::Validation("zero exp_poly denominator".into()));
                }
            }
            PlantBody::Factors(f) => {
                dims(f.outputs(), f.inputs(), "numerator factor")?;
                f.check_dims().map_err(|e| match e {
                    Error::Validation(s) => Error::Validation(s),
                    other => Error::Validation(other.to_string()),
                })?;
                check_block_algebra(self.algebra, f)?;
            }
        }
        Ok(())
    }

    /// The plant's value at a grid point.
    pub fn evaluate(&self, point: &GridPoint) -> Result<CMat> {
        let need_z = || {
            point
                .z()
                .ok_or_else(|| Error::Unsupported(format!("{} plant evaluated at {point}", self.algebra)))
        };
        match &self.body {
            PlantBody::StateSpace(ss) => ss.eval(need_z()?),
            PlantBody::Rational(entries) => {
                let z = need_z()?;
                let mut out = CMat::zeros(self.p, self.m);
                for (i, row) in entries.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        out[(i, j)] = e.eval(z)?;
                    }
                }
                Ok(out)
            }
            PlantBody::ExpPolyQuotient(entries) => {
                let y = point
                    .y()
                    .ok_or_else(|| Error::Unsupported(format!("exp_poly plant evaluated at {point}")))?;
                let mut out = CMat::zeros(self.p, self.m);
                for (i, row) in entries.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        let d = e.den.at(y);
                        if d.norm() == 0.0 {
                            return Err(Error::SingularResolvent(format!("denominator zero at {point}")));
                        }
                        out[(i, j)] = e.num.at(y) / d;
                    }
                }
                Ok(out)
            }
            PlantBody::Factors(f) => factors::right_quotient(f, point),
        }
    }

    /// A proper realization of the plant in the Möbius variable
    /// `w = (1 - a z)/(z - a)`, with `a` chosen away from the poles.
    pub fn w_realization(&self) -> Result<Realization> {
        let (poles, build): (Vec<_>, RealizeFn<'_>) = match &self.body {
            PlantBody::StateSpace(ss) => (ss.poles(), Box::new(move |a| ss.mobius(a))),
            PlantBody::Rational(entries) => (
                entries.iter().flatten().flat_map(|e| poly::roots(&e.den)).collect(),
                Box::new(move |a| realize_rational_mobius(entries, a)),
            ),
            _ => {
                return Err(Error::Unsupported(format!(
                    "{} bodies have no state-space realization",
                    self.body.kind()
                )))
            }
        };
        check_poles(&poles)?;
        let shift = choose_shift(&poles);
        let ss = build(shift)?.minimal(1e-10);
        Ok(Realization { shift, ss })
    }

    /// Entrywise rational form of a state-space plant.
    pub fn to_rational(&self) -> Result<Self> {
        match &self.body {
            PlantBody::StateSpace(ss) => Self::rational(ss.to_rational()?),
            PlantBody::Rational(_) => Ok(self.clone()),
            _ => Err(Error::Unsupported("rational form of a non-rational body".into())),
        }
    }

    /// State-space form in `z` (requires a plant that is proper in `z`).
    pub fn to_state_space(&self) -> Result<Self> {
        match &self.body {
            PlantBody::StateSpace(_) => Ok(self.clone()),
            PlantBody::Rational(_) => {
                let r = self.w_realization()?;
                let ss = r
                    .to_z()
                    .map_err(|_| Error::Unsupported("plant is improper in z".into()))?;
                Self::state_space(ss.minimal(1e-10))
            }
            _ => Err(Error::Unsupported("state-space form of a non-rational body".into())),
        }
    }
}

/// `evaluate` as a [`MatrixSampler`].
pub struct PlantSampler(pub std::sync::Arc<PlantModel>);

impl MatrixSampler for PlantSampler {
    fn rows(&self) -> usize {
        self.0.p
    }
    fn cols(&self) -> usize {
        self.0.m
    }
    fn sample(&self, point: &GridPoint) -> Result<CMat> {
        self.0.evaluate(point)
    }
    fn refinable(&self) -> bool {
        self.0.factors().is_none_or(|f| f.refinable())
    }
}

fn as_validation(e: Error) -> Error {
    Error::Validation(e.to_string())
}

fn check_poles(poles: &[linalg::C64]) -> Result<()> {
    for p in poles {
        let r = p.norm();
        if (r - 1.0).abs() <= CIRCLE_EXCLUSION {
            return Err(Error::NearCircleDegeneracy {
                modulus: r,
                delta: CIRCLE_EXCLUSION,
            });
        }
    }
    Ok(())
}

fn check_block_algebra(algebra: AlgebraTag, f: &CoprimeFactors) -> Result<()> {
    let mut blocks = vec![&f.n, &f.d, &f.nt, &f.dt];
    if let Some(b) = &f.bezout {
        blocks.extend([&b.x, &b.y, &b.xt, &b.yt]);
    }
    for b in blocks {
        let ok = match (&**b, algebra) {
            (FactorBlock::Realization(_), AlgebraTag::Disk) => true,
            (FactorBlock::Realization(_), _) => false,
            (FactorBlock::Symbolic(s), a) => matches!(
                (s, a),
                (SymBlock::Disk(_), AlgebraTag::Disk)
                    | (SymBlock::Ap(_), AlgebraTag::Ap)
                    | (SymBlock::Cd(_), AlgebraTag::Cd)
                    | (SymBlock::Polydisk(_), AlgebraTag::Polydisk(_))
            ),
            (FactorBlock::Sampled(s), a) => s.grid.algebra() == a,
        };
        if !ok {
            return Err(Error::Validation(format!("factor block does not belong to the {algebra} algebra")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ONE, ZERO};

    fn z_plant() -> PlantModel {
        PlantModel::rational(vec![vec![RationalEntry {
            num: vec![ZERO, ONE],
            den: vec![ONE],
        }]])
        .unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let at = |theta: f64| GridPoint::Circle { theta };
        let v = z_plant().evaluate(&at(std::f64::consts::FRAC_PI_2)).unwrap();
        assert!((v[(0, 0)] - c(0.0, 1.0)).norm() < 1e-15);
        let inv = PlantModel::rational(vec![vec![RationalEntry {
            num: vec![ONE],
            den: vec![ZERO, ONE],
        }]])
        .unwrap();
        let v = inv.evaluate(&at(std::f64::consts::PI)).unwrap();
        assert!((v[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pole_on_circle_is_rejected() {
        let r = PlantModel::rational(vec![vec![RationalEntry {
            num: vec![ONE],
            den: vec![c(-1.0, 0.0), ONE],
        }]]);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn improper_plant_has_no_z_realization() {
        assert!(z_plant().to_state_space().is_err());
        assert!(z_plant().w_realization().is_ok());
    }
}
