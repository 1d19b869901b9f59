//! Higher-order dynamic mode decomposition of a single utterance.
//!
//! Frames are delay-embedded with window `d` (stacked vectors
//! `[s_k; s_{k+1}; ...; s_{k+d-1}]`), a linear operator advancing one stacked
//! vector to the next is fitted by least squares through the pseudoinverse,
//! and the eigenvector of its largest-modulus eigenvalue becomes the
//! utterance representation. `d = 1` is standard DMD.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ep::{EpSequence, Representation};
use crate::error::{Error, Result};
use crate::numerics::{self, EigenPair, RealMatrix};

/// Delay-embedding window size (order parameter), at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct OrderParam(usize);

impl OrderParam {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("order parameter d must be >= 1".into()));
        }
        Ok(OrderParam(d))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for OrderParam {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        OrderParam::new(d)
    }
}

impl From<OrderParam> for usize {
    fn from(d: OrderParam) -> usize {
        d.0
    }
}

impl fmt::Display for OrderParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Fitted operator for one order parameter, with its sorted eigenpairs.
#[derive(Debug, Clone)]
pub struct KoopmanFit {
    pub order: OrderParam,
    pub operator: RealMatrix,
    pub eigenpairs: Vec<EigenPair>,
    /// `||Y - operator * X||_F` over the stacked snapshots.
    pub residual: f64,
}

/// Builds the snapshot pair `(X, Y)`: column `j` of `X` is the stacked vector
/// starting at frame `j`, and column `j` of `Y` the one starting at `j + 1`.
/// Both have `d * dim` rows and `N - d` columns.
pub fn stack(seq: &EpSequence, d: OrderParam) -> Result<(RealMatrix, RealMatrix)> {
    let n = seq.len();
    let d = d.get();
    if n <= d {
        return Err(Error::TooShort { n, d });
    }
    let m = seq.dim();
    let cols = n - d;
    let frames = seq.frames();
    let x = DMatrix::from_fn(d * m, cols, |r, c| frames[c + r / m][r % m]);
    let y = DMatrix::from_fn(d * m, cols, |r, c| frames[c + 1 + r / m][r % m]);
    Ok((RealMatrix::from_dmatrix(x)?, RealMatrix::from_dmatrix(y)?))
}

fn fit_operator(seq: &EpSequence, d: OrderParam) -> Result<(RealMatrix, f64)> {
    let (x, y) = stack(seq, d)?;
    let operator = y.matmul(&numerics::pseudoinverse(&x, None)?)?;
    let residual = (y.as_dmatrix() - operator.as_dmatrix() * x.as_dmatrix()).norm();
    if !residual.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite Koopman fit for utterance {:?}",
            seq.id
        )));
    }
    Ok((operator, residual))
}

/// Least-squares Koopman fit `A = Y X^+` followed by a full eigendecomposition.
pub fn fit_koopman(seq: &EpSequence, d: OrderParam) -> Result<KoopmanFit> {
    let (operator, residual) = fit_operator(seq, d)?;
    let eigenpairs = numerics::eig(&operator)?;
    Ok(KoopmanFit {
        order: d,
        operator,
        eigenpairs,
        residual,
    })
}

/// Validated, ascending, duplicate-free set of order parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<OrderParam>", into = "Vec<OrderParam>")]
pub struct OrderSet(Vec<OrderParam>);

impl OrderSet {
    pub fn new(orders: Vec<OrderParam>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::Config(
                "DMD needs at least one order parameter".into(),
            ));
        }
        if orders.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "order parameters must be ascending and distinct".into(),
            ));
        }
        Ok(OrderSet(orders))
    }

    pub fn from_values(ds: &[usize]) -> Result<Self> {
        Self::new(
            ds.iter()
                .map(|&d| OrderParam::new(d))
                .collect::<Result<_>>()?,
        )
    }

    /// `{1, 2, ..., max}`, the "[1-k]" configurations.
    pub fn up_to(max: usize) -> Result<Self> {
        Self::from_values(&(1..=max).collect::<Vec<_>>())
    }

    pub fn orders(&self) -> &[OrderParam] {
        &self.0
    }

    pub fn max(&self) -> usize {
        self.0.last().map_or(0, |d| d.get())
    }

    pub fn sum(&self) -> usize {
        self.0.iter().map(|d| d.get()).sum()
    }

    /// Representation length for frames of width `dim`: `2 * dim * sum(d)`.
    pub fn output_len(&self, dim: usize) -> usize {
        2 * dim * self.sum()
    }
}

impl TryFrom<Vec<OrderParam>> for OrderSet {
    type Error = Error;

    fn try_from(v: Vec<OrderParam>) -> Result<Self> {
        OrderSet::new(v)
    }
}

impl From<OrderSet> for Vec<OrderParam> {
    fn from(s: OrderSet) -> Self {
        s.0
    }
}

impl fmt::Display for OrderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Top dynamic mode for each order in `orders`, encoded as `[Re(v); Im(v)]`
/// and concatenated in order.
pub fn representation(seq: &EpSequence, orders: &OrderSet) -> Result<Representation> {
    let mut values = Vec::with_capacity(orders.output_len(seq.dim()));
    for &d in orders.orders() {
        let (operator, _) = fit_operator(seq, d)?;
        let top = numerics::top_eigenpair(&operator)?;
        values.extend(top.vector.iter().map(|z| z.re));
        values.extend(top.vector.iter().map(|z| z.im));
    }
    Ok(Representation {
        id: seq.id.clone(),
        label: seq.label.clone(),
        method: format!("dmd:d={orders}"),
        values,
    })
}
