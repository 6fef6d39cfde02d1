use nalgebra::DMatrix;

use super::cv::{cross_validate, CvConfig, CvResult, Regressor};
use crate::dataset::{fit_scalers, Observation};
use crate::error::{Error, Result};

pub const RIDGE: f64 = 1e-8;

/// Exponent vectors of every monomial of total degree `1..=degree` in `n` variables.
pub fn monomials(n: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for i in start..n {
            cur.push(i);
            out.push(cur.clone());
            if left > 1 {
                rec(i, n, left - 1, cur, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if degree > 0 {
        rec(0, n, degree, &mut Vec::new(), &mut out);
    }
    out.sort_by_key(|m| m.len());
    out
}

/// Least-squares regression on polynomial features of the scaled inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearRegressor {
    pub degree: usize,
}

impl LinearRegressor {
    pub fn linear() -> Self {
        LinearRegressor { degree: 1 }
    }

    pub fn polynomial(degree: usize) -> Self {
        LinearRegressor { degree }
    }
}

fn design(rows: &[Vec<f64>], terms: &[Vec<usize>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), terms.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            terms[j - 1].iter().map(|&k| rows[i][k]).product()
        }
    })
}

impl Regressor for LinearRegressor {
    fn name(&self) -> String {
        if self.degree == 1 {
            "linear".into()
        } else {
            format!("polynomial{}", self.degree)
        }
    }

    fn fit_predict(
        &self,
        train: &[Observation],
        _validation: &[Observation],
        test: &[Observation],
        _seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        if self.degree == 0 {
            return Err(Error::field("degree", "must be at least 1"));
        }
        let scalers = fit_scalers(train)?;
        let xs: Vec<Vec<f64>> = train.iter().map(|o| scalers.transform_x(&o.x)).collect();
        let terms = monomials(scalers.inputs.len(), self.degree);
        let a = design(&xs, &terms);
        let ny = scalers.targets.len();
        let y = DMatrix::from_fn(train.len(), ny, |i, j| scalers.targets[j].transform(train[i].y[j]));
        let mut gram = a.tr_mul(&a);
        for i in 0..gram.nrows() {
            gram[(i, i)] += RIDGE;
        }
        let rhs = a.tr_mul(&y);
        let coef = gram
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .or_else(|| gram.lu().solve(&rhs))
            .ok_or_else(|| Error::Shape("normal equations are singular".into()))?;

        let xt: Vec<Vec<f64>> = test.iter().map(|o| scalers.transform_x(&o.x)).collect();
        let pred = design(&xt, &terms) * coef;
        Ok((0..test.len())
            .map(|i| {
                let row: Vec<f64> = pred.row(i).iter().copied().collect();
                scalers.inverse_y(&row).0
            })
            .collect())
    }
}

/// Cross-validated baseline of the given polynomial degree (1 is linear).
pub fn baseline(
    data: &[Observation],
    names: &[String],
    corners: usize,
    degree: usize,
    cv: &CvConfig,
) -> Result<CvResult> {
    cross_validate(data, names, corners, &LinearRegressor::polynomial(degree), cv)
}
