//! Splitting frequency-response data into right and left tangential
//! interpolation data, conjugate closure, and the unitary change of basis
//! that makes conjugate-closed Loewner matrices real.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::data::FrequencyResponseDataset;
use crate::error::{LoewnerError, Result};
use crate::linalg::C64;

/// Right triple `(lambda, r, w)` with `w = H(lambda) r`.
#[derive(Clone, Debug, PartialEq)]
pub struct RightPoint {
    pub lambda: C64,
    pub direction: DVector<C64>,
    pub value: DVector<C64>,
}

/// Left triple `(mu, l, v)` with `v = l H(mu)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeftPoint {
    pub mu: C64,
    pub direction: RowDVector<C64>,
    pub value: RowDVector<C64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PartitionScheme {
    /// Even positions go right, odd positions go left.
    #[default]
    Interleave,
    /// First `ceil(N/2)` samples go right, the rest left.
    HalfSplit,
}

impl FromStr for PartitionScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "interleave" => Ok(Self::Interleave),
            "half" | "half-split" => Ok(Self::HalfSplit),
            other => Err(format!(
                "unknown partition scheme `{other}` (expected interleave|half)"
            )),
        }
    }
}

impl fmt::Display for PartitionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Interleave => "interleave",
            Self::HalfSplit => "half",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentialDataset {
    right: Vec<RightPoint>,
    left: Vec<LeftPoint>,
    inputs: usize,
    outputs: usize,
    conjugate_closed: bool,
}

impl TangentialDataset {
    pub fn new(
        inputs: usize,
        outputs: usize,
        right: Vec<RightPoint>,
        left: Vec<LeftPoint>,
    ) -> Result<Self> {
        let td = Self {
            right,
            left,
            inputs,
            outputs,
            conjugate_closed: false,
        };
        td.validate()?;
        Ok(td)
    }

    fn validate(&self) -> Result<()> {
        let (m, p) = (self.inputs, self.outputs);
        for pt in &self.right {
            if pt.direction.len() != m || pt.value.len() != p {
                return Err(LoewnerError::Dimension(format!(
                    "right point {} needs r in C^{m}, w in C^{p}",
                    pt.lambda
                )));
            }
        }
        for pt in &self.left {
            if pt.direction.len() != p || pt.value.len() != m {
                return Err(LoewnerError::Dimension(format!(
                    "left point {} needs l in C^(1x{p}), v in C^(1x{m})",
                    pt.mu
                )));
            }
        }
        let mut lambdas: Vec<C64> = self.right.iter().map(|p| p.lambda).collect();
        let mut mus: Vec<C64> = self.left.iter().map(|p| p.mu).collect();
        crate::lti::sort_complex(&mut lambdas);
        crate::lti::sort_complex(&mut mus);
        for set in [&lambdas, &mus] {
            if let Some(w) = set.windows(2).find(|w| w[0] == w[1]) {
                return Err(LoewnerError::DuplicateFrequency(w[0]));
            }
        }
        if let Some(x) = lambdas
            .iter()
            .find(|l| mus.binary_search_by(|m| cmp_complex(m, l)).is_ok())
        {
            return Err(LoewnerError::CoincidentPoints(*x));
        }
        Ok(())
    }

    pub fn right(&self) -> &[RightPoint] {
        &self.right
    }

    pub fn left(&self) -> &[LeftPoint] {
        &self.left
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn is_conjugate_closed(&self) -> bool {
        self.conjugate_closed
    }

    /// `Lambda = diag(lambda_i)`, rho x rho.
    pub fn lambda_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.right.len(),
            self.right.iter().map(|p| p.lambda),
        ))
    }

    /// `R = [r_1 .. r_rho]`, m x rho.
    pub fn r_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.inputs, self.right.len(), |i, k| {
            self.right[k].direction[i]
        })
    }

    /// `W = [w_1 .. w_rho]`, p x rho.
    pub fn w_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.outputs, self.right.len(), |i, k| {
            self.right[k].value[i]
        })
    }

    /// `M = diag(mu_j)`, nu x nu.
    pub fn mu_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.left.len(),
            self.left.iter().map(|p| p.mu),
        ))
    }

    /// `L` with rows `l_j`, nu x p.
    pub fn l_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.left.len(), self.outputs, |k, i| {
            self.left[k].direction[i]
        })
    }

    /// `V` with rows `v_j`, nu x m.
    pub fn v_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.left.len(), self.inputs, |k, i| self.left[k].value[i])
    }
}

fn cmp_complex(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn unit(len: usize, k: usize) -> DVector<C64> {
    let mut v = DVector::zeros(len);
    v[k] = C64::new(1.0, 0.0);
    v
}

/// Splits `ds` into right and left data. The t-th point of each group takes
/// tangential direction `e_(t mod m)` (right) or `e_(t mod p)^T` (left).
pub fn partition(
    ds: &FrequencyResponseDataset,
    scheme: PartitionScheme,
) -> Result<TangentialDataset> {
    let n = ds.len();
    if n < 2 {
        return Err(LoewnerError::TooFewSamples(n));
    }
    let (m, p) = (ds.inputs(), ds.outputs());
    let samples = ds.samples();
    let goes_right = |k: usize| match scheme {
        PartitionScheme::Interleave => k.is_multiple_of(2),
        PartitionScheme::HalfSplit => k < n.div_ceil(2),
    };

    let mut right = Vec::new();
    let mut left = Vec::new();
    for (k, smp) in samples.iter().enumerate() {
        if goes_right(k) {
            let r = unit(m, right.len() % m);
            let w = &smp.h * &r;
            right.push(RightPoint {
                lambda: smp.s,
                direction: r,
                value: w,
            });
        } else {
            let l = unit(p, left.len() % p).transpose();
            let v = &l * &smp.h;
            left.push(LeftPoint {
                mu: smp.s,
                direction: l,
                value: v,
            });
        }
    }
    TangentialDataset::new(m, p, right, left)
}

/// Appends the conjugate of every point off the real axis right after it, so
/// conjugate pairs sit next to each other.
pub fn conjugate_close(td: &TangentialDataset) -> Result<TangentialDataset> {
    if td.conjugate_closed {
        return Ok(td.clone());
    }
    let points = td
        .right
        .iter()
        .map(|p| p.lambda)
        .chain(td.left.iter().map(|p| p.mu));
    for s in points {
        if s.re != 0.0 {
            return Err(LoewnerError::NotImaginaryAxis(s));
        }
    }
    let mut right = Vec::with_capacity(2 * td.right.len());
    for pt in &td.right {
        right.push(pt.clone());
        if pt.lambda.im != 0.0 {
            right.push(RightPoint {
                lambda: pt.lambda.conj(),
                direction: pt.direction.conjugate(),
                value: pt.value.conjugate(),
            });
        }
    }
    let mut left = Vec::with_capacity(2 * td.left.len());
    for pt in &td.left {
        left.push(pt.clone());
        if pt.mu.im != 0.0 {
            left.push(LeftPoint {
                mu: pt.mu.conj(),
                direction: pt.direction.conjugate(),
                value: pt.value.conjugate(),
            });
        }
    }
    let mut closed = TangentialDataset::new(td.inputs, td.outputs, right, left)?;
    closed.conjugate_closed = true;
    Ok(closed)
}

/// Block-diagonal unitary change of basis for conjugate-closed data.
///
/// Each conjugate pair gets the block `(1/sqrt 2) [[1, 1], [i, -i]]` and each
/// self-conjugate point a `1`. The real forms are `J_l X J_r^*` for the
/// Loewner matrices, `J_l V` and `W J_r^*`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealTransform {
    pub left: DMatrix<C64>,
    pub right: DMatrix<C64>,
}

fn pair_block() -> [[C64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        [C64::new(h, 0.0), C64::new(h, 0.0)],
        [C64::new(0.0, h), C64::new(0.0, -h)],
    ]
}

fn transform_for(points: &[(C64, Vec<C64>, Vec<C64>)], side: &str) -> Result<DMatrix<C64>> {
    let n = points.len();
    let mut j = DMatrix::zeros(n, n);
    let block = pair_block();
    let mut k = 0;
    while k < n {
        let (s, dir, val) = &points[k];
        if s.im == 0.0 {
            j[(k, k)] = C64::new(1.0, 0.0);
            k += 1;
            continue;
        }
        let paired = points.get(k + 1).is_some_and(|(s2, dir2, val2)| {
            *s2 == s.conj()
                && dir.iter().zip(dir2).all(|(a, b)| *b == a.conj())
                && val.iter().zip(val2).all(|(a, b)| *b == a.conj())
        });
        if !paired {
            return Err(LoewnerError::Pairing(format!(
                "{side} point {s} at position {k} is not followed by its conjugate"
            )));
        }
        for (a, row) in block.iter().enumerate() {
            for (b, &x) in row.iter().enumerate() {
                j[(k + a, k + b)] = x;
            }
        }
        k += 2;
    }
    Ok(j)
}

pub fn realify(td: &TangentialDataset) -> Result<RealTransform> {
    if !td.conjugate_closed {
        return Err(LoewnerError::Pairing("data is not conjugate closed".into()));
    }
    let right: Vec<_> = td
        .right
        .iter()
        .map(|p| {
            (
                p.lambda,
                p.direction.iter().copied().collect(),
                p.value.iter().copied().collect(),
            )
        })
        .collect();
    let left: Vec<_> = td
        .left
        .iter()
        .map(|p| {
            (
                p.mu,
                p.direction.iter().copied().collect(),
                p.value.iter().copied().collect(),
            )
        })
        .collect();
    Ok(RealTransform {
        left: transform_for(&left, "left")?,
        right: transform_for(&right, "right")?,
    })
}
