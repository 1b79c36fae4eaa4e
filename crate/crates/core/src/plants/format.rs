//! JSON plant documents.
//!
//! ```json
//! {"algebra":"disk","kind":"rational","p":1,"m":1,
//!  "body":{"entries":[[{"num":[[0,0],[1,0]],"den":[[1,0]]}]]}}
//! ```
//!
//! Complex numbers are `[re, im]` (a bare real is accepted on input).
//! Polynomial coefficients ascend in degree. Floats are written with 17
//! significant digits so documents round-trip exactly.

use std::io;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::factors::{Bezout, CoprimeFactors, FactorBlock, Realization, Residuals, SampledBlock, SymBlock};
use super::statespace::{RationalEntry, StateSpace};
use super::{ExpPolyEntry, PlantBody, PlantModel};
use crate::config::DEFAULT_AP_RADIUS;
use crate::error::{Error, Result};
use crate::freqdomain::AlgebraTag;
use crate::linalg::{CMat, C64, I};
use crate::poly;
use crate::symbolic::{CdElement, ExpPoly, MultiLaurent, RationalY, RationalZ, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cx(C64);

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Real(f64),
            Pair([f64; 2]),
        }
        match Raw::deserialize(d) {
            Ok(Raw::Real(r)) => Ok(Cx(C64::new(r, 0.0))),
            Ok(Raw::Pair([re, im])) => Ok(Cx(C64::new(re, im))),
            Err(_) => Err(D::Error::custom("expected a number or a [re, im] pair")),
        }
    }
}

type Rows = Vec<Vec<Cx>>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    algebra: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arity: Option<usize>,
    kind: String,
    p: usize,
    m: usize,
    body: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SsBody {
    a: Rows,
    b: Rows,
    c: Rows,
    d: Rows,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatEntry {
    num: Vec<Cx>,
    den: Vec<Cx>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatBody {
    entries: Vec<Vec<RatEntry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Term {
    lambda: f64,
    coeff: Cx,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpEntry {
    num: Vec<Term>,
    den: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpBody {
    entries: Vec<Vec<ExpEntry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AcTerm {
    lambda: f64,
    num: Vec<Cx>,
    den: Vec<Cx>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CdEntry {
    #[serde(default)]
    ap: Vec<Term>,
    #[serde(default)]
    ac: Vec<AcTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Monomial {
    exp: Vec<i32>,
    coeff: Cx,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sampled {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    rows: usize,
    cols: usize,
    samples: Vec<Rows>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealizationDoc {
    shift: f64,
    a: Rows,
    b: Rows,
    c: Rows,
    d: Rows,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum Block {
    Symbolic(Vec<Vec<Value>>),
    Sampled(Sampled),
    Realization(RealizationDoc),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidualDoc {
    right: f64,
    left: f64,
    double: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bezout: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoprimeBody {
    n: Block,
    d: Block,
    nt: Block,
    dt: Block,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xt: Option<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    yt: Option<Block>,
    #[serde(default)]
    normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    residuals: Option<ResidualDoc>,
}

fn json_error(e: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Syntax | Category::Eof | Category::Io => Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
        Category::Data => Error::Validation(e.to_string()),
    }
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Validation(format!("{what}: {e}")))
}

fn matrix(rows: &Rows, nrows: usize, ncols: usize, what: &str) -> Result<CMat> {
    // empty row lists stand for matrices with no rows or no columns
    if (nrows == 0 || ncols == 0)
        && rows.iter().all(|r| r.is_empty())
        && (rows.is_empty() || rows.len() == nrows)
    {
        return Ok(CMat::zeros(nrows, ncols));
    }
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Validation(format!("{what} must be {nrows}x{ncols}")));
    }
    let mut m = CMat::zeros(nrows, ncols);
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            check_finite(v.0, what)?;
            m[(i, j)] = v.0;
        }
    }
    Ok(m)
}

fn rows_of(m: &CMat) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Cx(m[(i, j)])).collect())
        .collect()
}

fn check_finite(v: C64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("non-finite number in {what}")))
    }
}

fn coeffs(v: &[Cx], what: &str) -> Result<Vec<C64>> {
    if v.is_empty() {
        return Err(Error::Validation(format!("{what} has no coefficients")));
    }
    v.iter()
        .map(|c| check_finite(c.0, what).map(|_| c.0))
        .collect()
}

fn cx(v: &[C64]) -> Vec<Cx> {
    v.iter().copied().map(Cx).collect()
}

fn parse_algebra(name: &str, arity: Option<usize>) -> Result<AlgebraTag> {
    let tag = match name {
        "disk" => AlgebraTag::Disk,
        "ap" => AlgebraTag::Ap,
        "cd" => AlgebraTag::Cd,
        "polydisk" => AlgebraTag::Polydisk(
            arity.ok_or_else(|| Error::Validation("polydisk plants need an arity".into()))?,
        ),
        other => return Err(Error::Validation(format!("unknown algebra '{other}'"))),
    };
    if arity.is_some() && !matches!(tag, AlgebraTag::Polydisk(_)) {
        return Err(Error::Validation("arity only applies to polydisk plants".into()));
    }
    tag.validate()?;
    Ok(tag)
}

/// Parses and validates a plant document.
pub fn parse_plant(text: &str) -> Result<PlantModel> {
    let doc: Doc = serde_json::from_str(text).map_err(json_error)?;
    let algebra = parse_algebra(&doc.algebra, doc.arity)?;
    let (p, m) = (doc.p, doc.m);
    let body = match doc.kind.as_str() {
        "state_space" => {
            let b: SsBody = from_value(doc.body, "state_space body")?;
            let n = b.a.len();
            PlantBody::StateSpace(StateSpace::new(
                matrix(&b.a, n, n, "A")?,
                matrix(&b.b, n, m, "B")?,
                matrix(&b.c, p, n, "C")?,
                matrix(&b.d, p, m, "D")?,
            )?)
        }
        "rational" => {
            let b: RatBody = from_value(doc.body, "rational body")?;
            PlantBody::Rational(
                b.entries
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| {
                                Ok(RationalEntry {
                                    num: coeffs(&e.num, "numerator")?,
                                    den: coeffs(&e.den, "denominator")?,
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?,
            )
        }
        "exp_poly" => {
            let b: ExpBody = from_value(doc.body, "exp_poly body")?;
            PlantBody::ExpPolyQuotient(
                b.entries
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| {
                                Ok(ExpPolyEntry {
                                    num: exp_poly(algebra, &e.num)?,
                                    den: exp_poly(algebra, &e.den)?,
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?,
            )
        }
        "coprime" => PlantBody::Factors(coprime(algebra, from_value(doc.body, "coprime body")?)?),
        other => return Err(Error::Validation(format!("unknown plant kind '{other}'"))),
    };
    PlantModel::new(algebra, p, m, body)
}

/// Bohr-Fourier terms. Almost-periodic terms are `c exp(i lambda y)`; in the
/// Callier-Desoer algebra `lambda >= 0` is a delay, `c exp(-lambda s)`.
fn exp_poly(algebra: AlgebraTag, terms: &[Term]) -> Result<ExpPoly> {
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        check_finite(t.coeff.0, "exp_poly coefficient")?;
        if !t.lambda.is_finite() {
            return Err(Error::Validation("non-finite exponent".into()));
        }
        let w = match algebra {
            AlgebraTag::Cd => {
                if t.lambda < 0.0 {
                    return Err(Error::Validation(format!("negative delay {}", t.lambda)));
                }
                -t.lambda
            }
            _ => t.lambda,
        };
        out.push((w, t.coeff.0));
    }
    Ok(ExpPoly::new(out))
}

fn exp_terms(algebra: AlgebraTag, f: &ExpPoly) -> Vec<Term> {
    f.terms()
        .iter()
        .map(|&(w, c)| Term {
            lambda: if algebra == AlgebraTag::Cd { -w } else { w },
            coeff: Cx(c),
        })
        .collect()
}

fn laplace_to_y(num: &[C64], den: &[C64]) -> Result<RationalY> {
    let r = RationalY::from_laplace(num, den);
    if !r.is_strictly_proper() {
        return Err(Error::Validation("L1 part must be strictly proper in s".into()));
    }
    if let Some(root) = poly::roots(den).into_iter().find(|r| r.re >= 0.0) {
        return Err(Error::Validation(format!(
            "L1 part has a pole at s = {root}, outside the open left half-plane"
        )));
    }
    Ok(r)
}

fn y_to_laplace(p: &[C64]) -> Vec<C64> {
    // inverse of multiplying coefficient k by i^k
    let mut ik = C64::new(1.0, 0.0);
    p.iter()
        .map(|&a| {
            let v = a * ik;
            ik *= -I;
            v
        })
        .collect()
}

fn element_grid<T>(rows: &[Vec<Value>], f: impl Fn(&Value) -> Result<T>) -> Result<Vec<Vec<T>>> {
    rows.iter()
        .map(|r| r.iter().map(&f).collect::<Result<Vec<_>>>())
        .collect()
}

fn symbolic_block(algebra: AlgebraTag, rows: &[Vec<Value>]) -> Result<SymBlock> {
    Ok(match algebra {
        AlgebraTag::Disk => SymBlock::Disk(SymMatrix::from_rows(element_grid(rows, |v| {
            let e: RatEntry = from_value(v.clone(), "disk element")?;
            let den = coeffs(&e.den, "denominator")?;
            if den.last().is_some_and(|c| *c == crate::linalg::ZERO) {
                return Err(Error::Validation("denominator leading coefficient must be nonzero".into()));
            }
            if let Some(r) = poly::roots(&den).into_iter().find(|r| r.norm() <= 1.0 + crate::config::CIRCLE_EXCLUSION) {
                return Err(Error::Validation(format!("factor has a pole at z = {r} in the closed disk")));
            }
            Ok(RationalZ::new(coeffs(&e.num, "numerator")?, den))
        })?)?),
        AlgebraTag::Ap => SymBlock::Ap(SymMatrix::from_rows(element_grid(rows, |v| {
            let t: Vec<Term> = from_value(v.clone(), "ap element")?;
            exp_poly(algebra, &t)
        })?)?),
        AlgebraTag::Cd => SymBlock::Cd(SymMatrix::from_rows(element_grid(rows, |v| {
            let e: CdEntry = from_value(v.clone(), "cd element")?;
            let ac = e
                .ac
                .iter()
                .map(|t| {
                    if !(t.lambda.is_finite() && t.lambda >= 0.0) {
                        return Err(Error::Validation(format!("invalid delay {}", t.lambda)));
                    }
                    Ok((-t.lambda, laplace_to_y(&coeffs(&t.num, "numerator")?, &coeffs(&t.den, "denominator")?)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CdElement::new(exp_poly(algebra, &e.ap)?, ac))
        })?)?),
        AlgebraTag::Polydisk(n) => SymBlock::Polydisk(SymMatrix::from_rows(element_grid(rows, |v| {
            let t: Vec<Monomial> = from_value(v.clone(), "polydisk element")?;
            if let Some(bad) = t.iter().find(|m| m.exp.iter().any(|&k| k < 0)) {
                return Err(Error::Validation(format!("negative exponent {:?} in a polydisk element", bad.exp)));
            }
            MultiLaurent::new(n, t.iter().map(|m| (m.exp.clone(), m.coeff.0)))
        })?)?),
    })
}

fn symbolic_rows(b: &SymBlock) -> Vec<Vec<Value>> {
    let to = |v: &dyn erased::ToValue| v.to_value();
    match b {
        SymBlock::Disk(m) => m.to_rows().iter().map(|r| r.iter().map(|e| to(e)).collect()).collect(),
        SymBlock::Ap(m) => m.to_rows().iter().map(|r| r.iter().map(|e| to(e)).collect()).collect(),
        SymBlock::Cd(m) => m.to_rows().iter().map(|r| r.iter().map(|e| to(e)).collect()).collect(),
        SymBlock::Polydisk(m) => m.to_rows().iter().map(|r| r.iter().map(|e| to(e)).collect()).collect(),
    }
}

mod erased {
    use super::*;

    pub trait ToValue {
        fn to_value(&self) -> Value;
    }

    fn json<T: Serialize>(t: &T) -> Value {
        serde_json::to_value(t).expect("plain data serializes")
    }

    impl ToValue for RationalZ {
        fn to_value(&self) -> Value {
            // file elements are ordinary polynomials in z
            let k = self.num.low - self.den.low;
            let pad = |c: &[C64], by: i32| {
                let mut v = vec![crate::linalg::ZERO; by.max(0) as usize];
                v.extend_from_slice(c);
                cx(&v)
            };
            json(&RatEntry {
                num: pad(&self.num.coeffs, k),
                den: pad(&self.den.coeffs, -k),
            })
        }
    }

    impl ToValue for ExpPoly {
        fn to_value(&self) -> Value {
            json(&exp_terms(AlgebraTag::Ap, self))
        }
    }

    impl ToValue for CdElement {
        fn to_value(&self) -> Value {
            json(&CdEntry {
                ap: exp_terms(AlgebraTag::Cd, &self.ap),
                ac: self
                    .ac
                    .iter()
                    .map(|(w, r)| AcTerm {
                        lambda: -w,
                        num: cx(&y_to_laplace(&r.num)),
                        den: cx(&y_to_laplace(&r.den)),
                    })
                    .collect(),
            })
        }
    }

    impl ToValue for MultiLaurent {
        fn to_value(&self) -> Value {
            json(
                &self
                    .terms()
                    .map(|(e, c)| Monomial {
                        exp: e.clone(),
                        coeff: Cx(*c),
                    })
                    .collect::<Vec<_>>(),
            )
        }
    }
}

fn block(algebra: AlgebraTag, b: Block) -> Result<FactorBlock> {
    Ok(match b {
        Block::Symbolic(rows) => FactorBlock::Symbolic(symbolic_block(algebra, &rows)?),
        Block::Sampled(s) => {
            let samples = s
                .samples
                .iter()
                .map(|r| matrix(r, s.rows, s.cols, "sample"))
                .collect::<Result<Vec<_>>>()?;
            FactorBlock::Sampled(SampledBlock::new(
                algebra,
                s.size,
                s.radius.unwrap_or(DEFAULT_AP_RADIUS),
                s.rows,
                s.cols,
                samples,
            )?)
        }
        Block::Realization(r) => {
            if algebra != AlgebraTag::Disk {
                return Err(Error::Validation("realization blocks describe disk-algebra factors".into()));
            }
            if !(r.shift.is_finite() && r.shift.abs() < 1.0) {
                return Err(Error::Validation(format!("shift {} outside (-1, 1)", r.shift)));
            }
            let n = r.a.len();
            let m = r.d.first().map(|x| x.len()).unwrap_or(0);
            let p = r.d.len();
            let ss = StateSpace::new(
                matrix(&r.a, n, n, "A")?,
                matrix(&r.b, n, m, "B")?,
                matrix(&r.c, p, n, "C")?,
                matrix(&r.d, p, m, "D")?,
            )?;
            FactorBlock::Realization(Realization { shift: r.shift, ss })
        }
    })
}

fn block_doc(b: &FactorBlock) -> Block {
    match b {
        FactorBlock::Symbolic(s) => Block::Symbolic(symbolic_rows(s)),
        FactorBlock::Sampled(s) => Block::Sampled(Sampled {
            size: s.grid.size(),
            radius: (s.grid.algebra() == AlgebraTag::Ap).then(|| s.grid.ap_radius()),
            rows: s.rows,
            cols: s.cols,
            samples: s.samples.iter().map(rows_of).collect(),
        }),
        FactorBlock::Realization(r) => Block::Realization(RealizationDoc {
            shift: r.shift,
            a: rows_of(&r.ss.a),
            b: rows_of(&r.ss.b),
            c: rows_of(&r.ss.c),
            d: rows_of(&r.ss.d),
        }),
    }
}

fn coprime(algebra: AlgebraTag, b: CoprimeBody) -> Result<CoprimeFactors> {
    let arc = |x: Block| block(algebra, x).map(Arc::new);
    let bezout = match (b.x, b.y, b.xt, b.yt) {
        (None, None, None, None) => None,
        (Some(x), Some(y), Some(xt), Some(yt)) => Some(Bezout {
            x: arc(x)?,
            y: arc(y)?,
            xt: arc(xt)?,
            yt: arc(yt)?,
        }),
        _ => return Err(Error::Validation("Bezout witnesses x, y, xt, yt come together".into())),
    };
    Ok(CoprimeFactors {
        n: arc(b.n)?,
        d: arc(b.d)?,
        nt: arc(b.nt)?,
        dt: arc(b.dt)?,
        bezout,
        normalized: b.normalized,
        residuals: b.residuals.map(|r| Residuals {
            right: r.right,
            left: r.left,
            double: r.double,
            bezout: r.bezout,
        }),
    })
}

/// Formatter writing every float with 17 significant digits.
struct ExactFloats;

impl serde_json::ser::Formatter for ExactFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{value:.8e}")
    }
}

/// Serializes a value with the exact float formatter.
pub(crate) fn to_exact_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloats);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Canonical document for a plant; `parse_plant` inverts it exactly.
pub fn serialize_plant(plant: &PlantModel) -> String {
    let body = match &plant.body {
        PlantBody::StateSpace(ss) => serde_json::to_value(SsBody {
            a: rows_of(&ss.a),
            b: rows_of(&ss.b),
            c: rows_of(&ss.c),
            d: rows_of(&ss.d),
        }),
        PlantBody::Rational(entries) => serde_json::to_value(RatBody {
            entries: entries
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|e| RatEntry {
                            num: cx(&e.num),
                            den: cx(&e.den),
                        })
                        .collect()
                })
                .collect(),
        }),
        PlantBody::ExpPolyQuotient(entries) => serde_json::to_value(ExpBody {
            entries: entries
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|e| ExpEntry {
                            num: exp_terms(plant.algebra, &e.num),
                            den: exp_terms(plant.algebra, &e.den),
                        })
                        .collect()
                })
                .collect(),
        }),
        PlantBody::Factors(f) => {
            let opt = |sel: fn(&Bezout) -> &Arc<FactorBlock>| f.bezout.as_ref().map(|z| block_doc(sel(z)));
            serde_json::to_value(CoprimeBody {
                n: block_doc(&f.n),
                d: block_doc(&f.d),
                nt: block_doc(&f.nt),
                dt: block_doc(&f.dt),
                x: opt(|z| &z.x),
                y: opt(|z| &z.y),
                xt: opt(|z| &z.xt),
                yt: opt(|z| &z.yt),
                normalized: f.normalized,
                residuals: f.residuals.map(|r| ResidualDoc {
                    right: r.right,
                    left: r.left,
                    double: r.double,
                    bezout: r.bezout,
                }),
            })
        }
    }
    .expect("plain data serializes");
    let doc = Doc {
        algebra: plant.algebra.name().to_string(),
        arity: match plant.algebra {
            AlgebraTag::Polydisk(n) => Some(n),
            _ => None,
        },
        kind: plant.body.kind().to_string(),
        p: plant.p,
        m: plant.m,
        body,
    };
    to_exact_json(&doc)
}
