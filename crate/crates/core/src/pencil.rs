//! Loewner pencil assembly, Sylvester identity check, pencil SVD, order
//! selection and the reduced descriptor realization.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SVD};

use crate::error::{LoewnerError, Result};
use crate::linalg::{self, ResolventEvaluator, C64};
use crate::lti::{DescriptorSystem, SystemFile, TransferFunction, MAX_POLE_DIM};
use crate::partition::{realify, RealTransform, TangentialDataset};

pub const SYLVESTER_TOL: f64 = 1e-10;
pub const REALIFY_TOL: f64 = 1e-10;
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Loewner matrix `L`, shifted Loewner matrix `Ls`, left values `V` and right
/// values `W`, optionally in real form.
#[derive(Clone, Debug)]
pub struct LoewnerPencil {
    loewner: DMatrix<C64>,
    shifted: DMatrix<C64>,
    v: DMatrix<C64>,
    w: DMatrix<C64>,
    is_real: bool,
    source: TangentialDataset,
    transform: Option<RealTransform>,
    residuals: (f64, f64),
}

/// Assembles the pencil entrywise:
///
/// ```text
/// L[j, i]  = (v_j r_i - l_j w_i) / (mu_j - lambda_i)
/// Ls[j, i] = (mu_j v_j r_i - lambda_i l_j w_i) / (mu_j - lambda_i)
/// ```
///
/// With `make_real` the conjugate-pair congruence is applied and the
/// imaginary residue (which must be negligible) is dropped.
pub fn build_pencil(td: &TangentialDataset, make_real: bool) -> Result<LoewnerPencil> {
    let (right, left) = (td.right(), td.left());
    let (nu, rho) = (left.len(), right.len());
    let mut loewner = DMatrix::zeros(nu, rho);
    let mut shifted = DMatrix::zeros(nu, rho);
    for (j, lp) in left.iter().enumerate() {
        for (i, rp) in right.iter().enumerate() {
            let denom = lp.mu - rp.lambda;
            if denom == C64::new(0.0, 0.0) {
                return Err(LoewnerError::CoincidentPoints(lp.mu));
            }
            let vr = lp.value.dot(&rp.direction.transpose());
            let lw = lp.direction.dot(&rp.value.transpose());
            loewner[(j, i)] = (vr - lw) / denom;
            shifted[(j, i)] = (lp.mu * vr - rp.lambda * lw) / denom;
        }
    }
    let mut v = td.v_matrix();
    let mut w = td.w_matrix();

    let transform = if make_real {
        let j = realify(td)?;
        let jr_adj = j.right.adjoint();
        loewner = &j.left * loewner * &jr_adj;
        shifted = &j.left * shifted * &jr_adj;
        v = &j.left * v;
        w *= &jr_adj;
        for mat in [&mut loewner, &mut shifted, &mut v, &mut w] {
            let scale = linalg::max_abs(mat);
            let residue = linalg::max_imag(mat);
            if residue > REALIFY_TOL * scale {
                return Err(LoewnerError::RealifyResidueTooLarge {
                    residue: residue / scale,
                    tol: REALIFY_TOL,
                });
            }
            mat.apply(|z| z.im = 0.0);
        }
        Some(j)
    } else {
        None
    };

    let mut pencil = LoewnerPencil {
        loewner,
        shifted,
        v,
        w,
        is_real: make_real,
        source: td.clone(),
        transform,
        residuals: (0.0, 0.0),
    };
    let (res1, res2) = sylvester_residual(&pencil);
    if res1 > SYLVESTER_TOL || res2 > SYLVESTER_TOL {
        return Err(LoewnerError::SylvesterResidual {
            res1,
            res2,
            tol: SYLVESTER_TOL,
        });
    }
    pencil.residuals = (res1, res2);
    Ok(pencil)
}

/// Relative residuals of `M L - L Lambda = V R - L W` and
/// `M Ls - Ls Lambda = M V R - L W Lambda`, measured in the complex basis of
/// the source data.
pub fn sylvester_residual(pencil: &LoewnerPencil) -> (f64, f64) {
    let td = &pencil.source;
    let (loewner, shifted) = match &pencil.transform {
        Some(j) => {
            let jl_adj = j.left.adjoint();
            (
                &jl_adj * &pencil.loewner * &j.right,
                &jl_adj * &pencil.shifted * &j.right,
            )
        }
        None => (pencil.loewner.clone(), pencil.shifted.clone()),
    };
    let lambdas: Vec<C64> = td.right().iter().map(|p| p.lambda).collect();
    let mus: Vec<C64> = td.left().iter().map(|p| p.mu).collect();
    let commutator = |x: &DMatrix<C64>| {
        DMatrix::from_fn(x.nrows(), x.ncols(), |j, i| {
            mus[j] * x[(j, i)] - x[(j, i)] * lambdas[i]
        })
    };

    let vr = td.v_matrix() * td.r_matrix();
    let lw = td.l_matrix() * td.w_matrix();
    let rhs1 = &vr - &lw;
    let rhs2 = DMatrix::from_fn(vr.nrows(), vr.ncols(), |j, i| {
        mus[j] * vr[(j, i)] - lw[(j, i)] * lambdas[i]
    });

    let res1 = (commutator(&loewner) - &rhs1).norm() / rhs1.norm().max(1.0);
    let res2 = (commutator(&shifted) - &rhs2).norm() / rhs2.norm().max(1.0);
    (res1, res2)
}

impl LoewnerPencil {
    /// `L`, nu x rho.
    pub fn loewner(&self) -> &DMatrix<C64> {
        &self.loewner
    }

    /// `Ls`, nu x rho.
    pub fn shifted(&self) -> &DMatrix<C64> {
        &self.shifted
    }

    /// Left values `V`, nu x m.
    pub fn v(&self) -> &DMatrix<C64> {
        &self.v
    }

    /// Right values `W`, p x rho.
    pub fn w(&self) -> &DMatrix<C64> {
        &self.w
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn source(&self) -> &TangentialDataset {
        &self.source
    }

    /// Sylvester residuals recorded at construction.
    pub fn residuals(&self) -> (f64, f64) {
        self.residuals
    }

    pub fn max_order(&self) -> usize {
        self.loewner.nrows().min(self.loewner.ncols())
    }

    pub fn inputs(&self) -> usize {
        self.v.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.w.nrows()
    }

    /// Shift used when none is given: the first right point, or its modulus
    /// for real pencils so that the factors stay real.
    pub fn default_shift(&self) -> C64 {
        let lambda = self.source.right()[0].lambda;
        if self.is_real {
            C64::new(lambda.norm(), 0.0)
        } else {
            lambda
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Shift {
    #[default]
    Auto,
    Value(C64),
}

/// SVD of `Ls - x L`. `left` is nu x k and `right` is rho x k with
/// `k = min(nu, rho)`, so `Ls - x L = left * diag(sigma) * right^*`.
#[derive(Clone, Debug)]
pub struct PencilSVD {
    pub left: DMatrix<C64>,
    pub singular_values: Vec<f64>,
    pub right: DMatrix<C64>,
    pub shift: C64,
    pub real: bool,
}

impl PencilSVD {
    /// `k,sigma` rows with 1-based `k`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("k,sigma\n");
        for (k, s) in self.singular_values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", k + 1, crate::data::fmt_f64(*s)));
        }
        out
    }

    /// Singular values divided by the largest one.
    pub fn normalized(&self) -> Vec<f64> {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .map(|s| if top > 0.0 { s / top } else { 0.0 })
            .collect()
    }
}

pub fn svd_pencil(pencil: &LoewnerPencil, shift: Shift) -> PencilSVD {
    let x = match shift {
        Shift::Auto => pencil.default_shift(),
        Shift::Value(x) => x,
    };
    if pencil.is_real && x.im == 0.0 {
        let mat = DMatrix::from_fn(pencil.loewner.nrows(), pencil.loewner.ncols(), |j, i| {
            pencil.shifted[(j, i)].re - x.re * pencil.loewner[(j, i)].re
        });
        let svd = SVD::new(mat, true, true);
        PencilSVD {
            left: linalg::complexify(&svd.u.expect("left vectors requested")),
            singular_values: svd.singular_values.iter().copied().collect(),
            right: linalg::complexify(&svd.v_t.expect("right vectors requested").transpose()),
            shift: x,
            real: true,
        }
    } else {
        let mat = &pencil.shifted - &pencil.loewner * x;
        let svd = SVD::new(mat, true, true);
        PencilSVD {
            left: svd.u.expect("left vectors requested"),
            singular_values: svd.singular_values.iter().copied().collect(),
            right: svd.v_t.expect("right vectors requested").adjoint(),
            shift: x,
            real: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrderPolicy {
    Explicit(usize),
    /// Keep every singular value with `sigma_k >= tol * sigma_1`.
    Tolerance(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderSelection {
    pub order: usize,
    /// Set when the pencil carries no signal at all (`sigma_1 = 0`).
    pub no_signal: bool,
}

pub fn select_order(svd: &PencilSVD, policy: OrderPolicy) -> Result<OrderSelection> {
    let max = svd.singular_values.len();
    match policy {
        OrderPolicy::Explicit(r) => {
            if r == 0 || r > max {
                return Err(LoewnerError::OrderOutOfRange { r, max });
            }
            Ok(OrderSelection {
                order: r,
                no_signal: false,
            })
        }
        OrderPolicy::Tolerance(tol) => {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(LoewnerError::InvalidTolerance(tol));
            }
            let top = svd.singular_values.first().copied().unwrap_or(0.0);
            if top == 0.0 {
                return Ok(OrderSelection {
                    order: 0,
                    no_signal: true,
                });
            }
            let order = svd
                .singular_values
                .iter()
                .filter(|&&s| s >= tol * top)
                .count();
            Ok(OrderSelection {
                order,
                no_signal: false,
            })
        }
    }
}

/// Reduced realization `(Et, At, Bt, Ct, 0)` of order `r`.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    et: DMatrix<C64>,
    at: DMatrix<C64>,
    bt: DMatrix<C64>,
    ct: DMatrix<C64>,
    dt: DMatrix<C64>,
    sigma: Vec<f64>,
    shift: Option<C64>,
    is_real: bool,
    evaluator: ResolventEvaluator,
}

/// Projects the pencil onto its first `r` singular directions:
/// `Et = -Y_r^* L X_r`, `At = -Y_r^* Ls X_r`, `Bt = Y_r^* V`, `Ct = W X_r`.
pub fn reduce(pencil: &LoewnerPencil, svd: &PencilSVD, r: usize) -> Result<ReducedModel> {
    let max = pencil.max_order().min(svd.singular_values.len());
    if r == 0 || r > max {
        return Err(LoewnerError::OrderOutOfRange { r, max });
    }
    let y_adj = svd.left.columns(0, r).adjoint();
    let x = svd.right.columns(0, r);
    let et = -(&y_adj * &pencil.loewner * x);
    let at = -(&y_adj * &pencil.shifted * x);
    let bt = &y_adj * &pencil.v;
    let ct = &pencil.w * x;
    let mut model = ReducedModel::from_parts(et, at, bt, ct, pencil.is_real && svd.real).map_err(
        |e| match e {
            LoewnerError::SingularE => LoewnerError::SingularEt { r },
            other => other,
        },
    )?;
    model.sigma = svd.singular_values.clone();
    model.shift = Some(svd.shift);
    Ok(model)
}

/// [`reduce`], retrying at `r + 1` when `Et` is singular on complex
/// conjugate-closed data (the truncation split a conjugate pair).
pub fn reduce_adaptive(pencil: &LoewnerPencil, svd: &PencilSVD, r: usize) -> Result<ReducedModel> {
    match reduce(pencil, svd, r) {
        Err(LoewnerError::SingularEt { .. })
            if !pencil.is_real && pencil.source.is_conjugate_closed() && r < pencil.max_order() =>
        {
            reduce(pencil, svd, r + 1)
        }
        other => other,
    }
}

impl ReducedModel {
    /// Builds a model with zero feedthrough, checking that `Et` is
    /// nonsingular. With `real` set the imaginary parts are dropped.
    pub fn from_parts(
        et: DMatrix<C64>,
        at: DMatrix<C64>,
        bt: DMatrix<C64>,
        ct: DMatrix<C64>,
        real: bool,
    ) -> Result<Self> {
        let dt = DMatrix::zeros(ct.nrows(), bt.ncols());
        Self::with_feedthrough(et, at, bt, ct, dt, real)
    }

    fn with_feedthrough(
        mut et: DMatrix<C64>,
        mut at: DMatrix<C64>,
        mut bt: DMatrix<C64>,
        mut ct: DMatrix<C64>,
        mut dt: DMatrix<C64>,
        real: bool,
    ) -> Result<Self> {
        let r = at.nrows();
        if r == 0
            || et.shape() != (r, r)
            || at.shape() != (r, r)
            || bt.nrows() != r
            || ct.ncols() != r
            || dt.shape() != (ct.nrows(), bt.ncols())
        {
            return Err(LoewnerError::Dimension(
                "inconsistent reduced realization".into(),
            ));
        }
        for m in [&et, &at, &bt, &ct, &dt] {
            if !linalg::all_finite(m) {
                return Err(LoewnerError::NonFinite("reduced realization".into()));
            }
        }
        if real {
            for m in [&mut et, &mut at, &mut bt, &mut ct, &mut dt] {
                m.apply(|z| z.im = 0.0);
            }
        }
        let sv = et.clone().singular_values();
        let (hi, lo) = sv
            .iter()
            .fold((0.0f64, f64::INFINITY), |(h, l), &s| (h.max(s), l.min(s)));
        if hi == 0.0 || lo <= hi * r as f64 * f64::EPSILON {
            return Err(LoewnerError::SingularE);
        }
        let evaluator = ResolventEvaluator::new(&et, &at, &bt, &ct, &dt)?;
        Ok(Self {
            et,
            at,
            bt,
            ct,
            dt,
            sigma: Vec::new(),
            shift: None,
            is_real: real,
            evaluator,
        })
    }

    pub fn order(&self) -> usize {
        self.at.nrows()
    }

    pub fn et(&self) -> &DMatrix<C64> {
        &self.et
    }

    pub fn at(&self) -> &DMatrix<C64> {
        &self.at
    }

    pub fn bt(&self) -> &DMatrix<C64> {
        &self.bt
    }

    pub fn ct(&self) -> &DMatrix<C64> {
        &self.ct
    }

    pub fn dt(&self) -> &DMatrix<C64> {
        &self.dt
    }

    /// Pencil singular values that justified the order.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn shift(&self) -> Option<C64> {
        self.shift
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// Eigenvalues of `Et^{-1} At`, sorted by real then imaginary part.
    pub fn poles(&self) -> Result<Vec<C64>> {
        let r = self.order();
        if r > MAX_POLE_DIM {
            return Err(LoewnerError::DimensionTooLarge {
                n: r,
                max: MAX_POLE_DIM,
            });
        }
        let state = linalg::lu_solve(self.et.clone(), &self.at).ok_or(LoewnerError::SingularE)?;
        let mut poles: Vec<C64> = if self.is_real {
            state
                .map(|z| z.re)
                .complex_eigenvalues()
                .iter()
                .copied()
                .collect()
        } else {
            state
                .eigenvalues()
                .ok_or_else(|| {
                    LoewnerError::NonFinite("complex Schur form did not converge".into())
                })?
                .iter()
                .copied()
                .collect()
        };
        crate::lti::sort_complex(&mut poles);
        Ok(poles)
    }

    /// The model as a real descriptor system, if it is real.
    pub fn to_descriptor_system(&self) -> Option<DescriptorSystem> {
        if !self.is_real {
            return None;
        }
        let re = |m: &DMatrix<C64>| m.map(|z| z.re);
        DescriptorSystem::with_feedthrough(
            re(&self.et),
            re(&self.at),
            re(&self.bt),
            re(&self.ct),
            re(&self.dt),
        )
        .ok()
    }

    /// System JSON; complex models carry additional `*_im` matrices.
    pub fn to_json(&self) -> Result<String> {
        let file = SystemFile::from_complex(
            [&self.et, &self.at, &self.bt, &self.ct, &self.dt],
            self.is_real,
        );
        Ok(serde_json::to_string(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        let real = !file.is_complex();
        let (e, a, b, c, d) = file.complex_parts()?;
        Self::with_feedthrough(e, a, b, c, d, real)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl TransferFunction for ReducedModel {
    fn inputs(&self) -> usize {
        self.bt.ncols()
    }

    fn outputs(&self) -> usize {
        self.ct.nrows()
    }

    fn eval_transfer(&self, s: C64) -> Result<DMatrix<C64>> {
        self.evaluator.eval(s)
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shift::Auto => f.write_str("auto"),
            Shift::Value(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

impl FromStr for Shift {
    type Err = String;

    /// Accepts `auto`, `a`, `bi`, `a+bi` and `a-bi`.
    fn from_str(text: &str) -> std::result::Result<Self, Self::Err> {
        let t = text.trim();
        if t == "auto" {
            return Ok(Shift::Auto);
        }
        let bad = || format!("cannot parse shift `{text}` (expected auto, a, bi or a+bi)");
        let parse = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let Some(body) = t.strip_suffix('i') else {
            return Ok(Shift::Value(C64::new(parse(t)?, 0.0)));
        };
        // Split at the last sign that is not part of an exponent.
        let bytes = body.as_bytes();
        let split = (1..bytes.len()).rev().find(|&k| {
            (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E')
        });
        let z = match split {
            Some(k) => {
                let im = match &body[k..] {
                    "+" => 1.0,
                    "-" => -1.0,
                    s => parse(s)?,
                };
                C64::new(parse(&body[..k])?, im)
            }
            None => {
                let im = match body {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    s => parse(s)?,
                };
                C64::new(0.0, im)
            }
        };
        Ok(Shift::Value(z))
    }
}
