//! Descriptor LTI systems `E x' = A x + B u, y = C x + D u` in the frequency
//! domain, plus a seeded generator of lightly damped modal benchmarks.

use std::path::Path;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LoewnerError, Result};
use crate::linalg::{self, C64};

/// Largest state dimension accepted by [`DescriptorSystem::poles`].
pub const MAX_POLE_DIM: usize = 2000;

/// Anything that can be evaluated as a `p x m` transfer matrix at a complex
/// frequency.
pub trait TransferFunction: Sync {
    fn inputs(&self) -> usize;
    fn outputs(&self) -> usize;
    fn eval_transfer(&self, s: C64) -> Result<DMatrix<C64>>;

    /// Batch evaluation. Implementations may precompute a factorization
    /// shared by every point.
    fn eval_many(&self, points: &[C64]) -> Result<Vec<DMatrix<C64>>> {
        points.iter().map(|&s| self.eval_transfer(s)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorSystem {
    e: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl DescriptorSystem {
    /// Builds a system with zero feedthrough.
    pub fn new(e: DMatrix<f64>, a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let d = DMatrix::zeros(c.nrows(), b.ncols());
        Self::with_feedthrough(e, a, b, c, d)
    }

    pub fn with_feedthrough(
        e: DMatrix<f64>,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        let (m, p) = (b.ncols(), c.nrows());
        if n == 0 || m == 0 || p == 0 {
            return Err(LoewnerError::Dimension(format!(
                "n, m, p must be positive (got n={n}, m={m}, p={p})"
            )));
        }
        let shapes = [
            ("E", e.shape(), (n, n)),
            ("A", a.shape(), (n, n)),
            ("B", b.shape(), (n, m)),
            ("C", c.shape(), (p, n)),
            ("D", d.shape(), (p, m)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(LoewnerError::Dimension(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        for (name, mat) in [("E", &e), ("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if mat.iter().any(|x| !x.is_finite()) {
                return Err(LoewnerError::NonFinite(format!("matrix {name}")));
            }
        }
        linalg::lu_solve_real(e.clone(), &DMatrix::identity(n, 1))
            .ok_or(LoewnerError::SingularE)?;
        Ok(Self { e, a, b, c, d })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// The SISO subsystem from input `in_idx` to output `out_idx`.
    pub fn channel(&self, out_idx: usize, in_idx: usize) -> Result<Self> {
        if out_idx >= self.outputs() || in_idx >= self.inputs() {
            return Err(LoewnerError::IndexOutOfRange {
                out_idx,
                in_idx,
                outputs: self.outputs(),
                inputs: self.inputs(),
            });
        }
        Self::with_feedthrough(
            self.e.clone(),
            self.a.clone(),
            self.b.columns(in_idx, 1).into_owned(),
            self.c.rows(out_idx, 1).into_owned(),
            DMatrix::from_element(1, 1, self.d[(out_idx, in_idx)]),
        )
    }

    /// Generalized eigenvalues of `(A, E)`, sorted by real then imaginary
    /// part.
    pub fn poles(&self) -> Result<Vec<C64>> {
        let n = self.states();
        if n > MAX_POLE_DIM {
            return Err(LoewnerError::DimensionTooLarge {
                n,
                max: MAX_POLE_DIM,
            });
        }
        let state =
            linalg::lu_solve_real(self.e.clone(), &self.a).ok_or(LoewnerError::SingularE)?;
        let mut poles: Vec<C64> = state.complex_eigenvalues().iter().copied().collect();
        sort_complex(&mut poles);
        Ok(poles)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SystemFile::from_real(&self.e, &self.a, &self.b, &self.c, &self.d);
        Ok(serde_json::to_string(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        if file.is_complex() {
            return Err(LoewnerError::SchemaMismatch(
                "system file carries imaginary parts; a descriptor system must be real".into(),
            ));
        }
        let (e, a, b, c, d) = file.real_parts()?;
        Self::with_feedthrough(e, a, b, c, d)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl TransferFunction for DescriptorSystem {
    fn inputs(&self) -> usize {
        self.b.ncols()
    }

    fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `C (sE - A)^{-1} B + D` through an LU solve against `B`.
    fn eval_transfer(&self, s: C64) -> Result<DMatrix<C64>> {
        let pencil = DMatrix::from_fn(self.states(), self.states(), |i, j| {
            s * self.e[(i, j)] - self.a[(i, j)]
        });
        let x = linalg::lu_solve(pencil, &linalg::complexify(&self.b))
            .ok_or(LoewnerError::SingularPencil { s })?;
        Ok(linalg::complexify(&self.c) * x + linalg::complexify(&self.d))
    }
}

pub(crate) fn sort_complex(v: &mut [C64]) {
    v.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
}

/// Parameters of the synthetic modal benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalSpec {
    pub modes: usize,
    pub omega: (f64, f64),
    pub damping: (f64, f64),
    pub inputs: usize,
    pub outputs: usize,
    pub seed: u64,
}

impl ModalSpec {
    /// 135 modes and 3x3 ports, giving the 270-state, 3-input, 3-output shape
    /// of the space-station service-module benchmark.
    pub fn iss_like(seed: u64) -> Self {
        Self {
            modes: 135,
            omega: (0.5, 50.0),
            damping: (0.05, 0.2),
            inputs: 3,
            outputs: 3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.modes == 0 {
            problems.push("modes must be at least 1".to_string());
        }
        let (w0, w1) = self.omega;
        if !(w0.is_finite() && w1.is_finite() && w0 > 0.0 && w0 <= w1) {
            problems.push(format!(
                "omega range [{w0}, {w1}] must satisfy 0 < min <= max"
            ));
        }
        let (z0, z1) = self.damping;
        if !(z0 > 0.0 && z0 <= z1 && z1 < 1.0) {
            problems.push(format!(
                "damping range [{z0}, {z1}] must satisfy 0 < min <= max < 1"
            ));
        }
        if self.inputs == 0 || self.outputs == 0 {
            problems.push("inputs and outputs must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(LoewnerError::InvalidRange(problems.join("; ")))
        }
    }
}

/// Builds `E = I`, `A = blkdiag([[0, 1], [-w_k^2, -2 z_k w_k]])` with `w_k`
/// log-spaced over the omega range and `z_k` uniform over the damping range.
/// `B` and `C` are uniform in `[-1, 1]`. Draw order: all damping ratios, then
/// `B` row by row, then `C` row by row.
pub fn generate_modal_system(spec: &ModalSpec) -> Result<DescriptorSystem> {
    spec.validate()?;
    let k = spec.modes;
    let n = 2 * k;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let (w0, w1) = spec.omega;
    let omegas: Vec<f64> = (0..k)
        .map(|i| {
            if k == 1 {
                w0
            } else {
                w0 * (w1 / w0).powf(i as f64 / (k - 1) as f64)
            }
        })
        .collect();
    let (z0, z1) = spec.damping;
    let zetas: Vec<f64> = (0..k)
        .map(|_| {
            if z0 == z1 {
                z0
            } else {
                rng.random_range(z0..z1)
            }
        })
        .collect();

    let mut a = DMatrix::zeros(n, n);
    for (i, (w, z)) in omegas.iter().zip(&zetas).enumerate() {
        let j = 2 * i;
        a[(j, j + 1)] = 1.0;
        a[(j + 1, j)] = -w * w;
        a[(j + 1, j + 1)] = -2.0 * z * w;
    }
    let mut uniform = |rows: usize, cols: usize| {
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        DMatrix::from_row_slice(rows, cols, &data)
    };
    let b = uniform(n, spec.inputs);
    let c = uniform(spec.outputs, n);
    DescriptorSystem::new(DMatrix::identity(n, n), a, b, c)
}

type Rows = Vec<Vec<f64>>;

/// On-disk layout shared by descriptor systems and reduced models. Complex
/// models add `*_im` fields carrying imaginary parts.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct SystemFile {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    #[serde(rename = "E")]
    pub e: Rows,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "C")]
    pub c: Rows,
    #[serde(rename = "D")]
    pub d: Rows,
    #[serde(rename = "E_im", default, skip_serializing_if = "Option::is_none")]
    pub e_im: Option<Rows>,
    #[serde(rename = "A_im", default, skip_serializing_if = "Option::is_none")]
    pub a_im: Option<Rows>,
    #[serde(rename = "B_im", default, skip_serializing_if = "Option::is_none")]
    pub b_im: Option<Rows>,
    #[serde(rename = "C_im", default, skip_serializing_if = "Option::is_none")]
    pub c_im: Option<Rows>,
    #[serde(rename = "D_im", default, skip_serializing_if = "Option::is_none")]
    pub d_im: Option<Rows>,
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn from_rows(
    name: &str,
    rows: &Rows,
    nrows: usize,
    ncols: usize,
) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(LoewnerError::SchemaMismatch(format!(
            "matrix {name} must be {nrows}x{ncols}"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

type Realization<T> = (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>);

impl SystemFile {
    pub fn from_real(
        e: &DMatrix<f64>,
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        c: &DMatrix<f64>,
        d: &DMatrix<f64>,
    ) -> Self {
        Self {
            n: a.nrows(),
            m: b.ncols(),
            p: c.nrows(),
            e: to_rows(e),
            a: to_rows(a),
            b: to_rows(b),
            c: to_rows(c),
            d: to_rows(d),
            e_im: None,
            a_im: None,
            b_im: None,
            c_im: None,
            d_im: None,
        }
    }

    pub fn from_complex(mats: [&DMatrix<C64>; 5], real: bool) -> Self {
        let re = mats.map(|m| m.map(|z| z.re));
        let mut file = Self::from_real(&re[0], &re[1], &re[2], &re[3], &re[4]);
        if !real {
            let im = mats.map(|m| Some(to_rows(&m.map(|z| z.im))));
            let [e, a, b, c, d] = im;
            file.e_im = e;
            file.a_im = a;
            file.b_im = b;
            file.c_im = c;
            file.d_im = d;
        }
        file
    }

    pub fn is_complex(&self) -> bool {
        self.e_im.is_some()
            || self.a_im.is_some()
            || self.b_im.is_some()
            || self.c_im.is_some()
            || self.d_im.is_some()
    }

    pub fn real_parts(&self) -> Result<Realization<f64>> {
        let (n, m, p) = (self.n, self.m, self.p);
        Ok((
            from_rows("E", &self.e, n, n)?,
            from_rows("A", &self.a, n, n)?,
            from_rows("B", &self.b, n, m)?,
            from_rows("C", &self.c, p, n)?,
            from_rows("D", &self.d, p, m)?,
        ))
    }

    pub fn complex_parts(&self) -> Result<Realization<C64>> {
        let (e, a, b, c, d) = self.real_parts()?;
        let join = |name: &str, re: DMatrix<f64>, im: &Option<Rows>| -> Result<DMatrix<C64>> {
            match im {
                None => Ok(linalg::complexify(&re)),
                Some(rows) => {
                    let im = from_rows(name, rows, re.nrows(), re.ncols())?;
                    Ok(re.zip_map(&im, Complex::new))
                }
            }
        };
        Ok((
            join("E_im", e, &self.e_im)?,
            join("A_im", a, &self.a_im)?,
            join("B_im", b, &self.b_im)?,
            join("C_im", c, &self.c_im)?,
            join("D_im", d, &self.d_im)?,
        ))
    }
}
