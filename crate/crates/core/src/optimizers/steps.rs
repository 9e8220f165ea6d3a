use crate::error::{invalid, Error, Result};
use crate::mat::Mat;
use crate::spectral::{msgn, tmsgn};

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid(format!("step size must be positive, got {eta}")));
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&mu) {
        return Err(invalid(format!("momentum must lie in [0, 1), got {mu}")));
    }
    Ok(())
}

fn descend(x: &Mat, direction: &Mat, eta: f64) -> Mat {
    let mut out = x.clone();
    out.axpy(-eta, direction);
    out
}

/// Spectral descent `x − η msgn(g)`; a zero subgradient leaves `x` in place.
pub fn sd_step(x: &Mat, g: &Mat, eta: f64) -> Result<Mat> {
    check_eta(eta)?;
    x.check_same_shape(g)?;
    if g.is_zero() {
        return Ok(x.clone());
    }
    Ok(descend(x, &msgn(g)?, eta))
}

/// Truncated spectral descent `x − η tmsgn(g, s)`.
pub fn tsd_step(x: &Mat, g: &Mat, eta: f64, s: usize) -> Result<Mat> {
    check_eta(eta)?;
    x.check_same_shape(g)?;
    let d = tmsgn(g, s)?;
    if g.is_zero() {
        return Ok(x.clone());
    }
    Ok(descend(x, &d, eta))
}

/// Muon: `B ← μB + g`, `x ← x − η msgn(B)`. Returns `(x, B)`.
pub fn muon_step(x: &Mat, g: &Mat, buffer: &Mat, mu: f64, eta: f64) -> Result<(Mat, Mat)> {
    muonw_step(x, g, buffer, mu, eta, 0.0)
}

/// Muon with decoupled weight decay: `x ← x − η (msgn(B) + λx)`.
pub fn muonw_step(
    x: &Mat,
    g: &Mat,
    buffer: &Mat,
    mu: f64,
    eta: f64,
    lambda: f64,
) -> Result<(Mat, Mat)> {
    check_eta(eta)?;
    check_mu(mu)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!(
            "weight decay must be non-negative, got {lambda}"
        )));
    }
    x.check_same_shape(g)?;
    x.check_same_shape(buffer)?;
    let mut b = buffer.scale(mu);
    b.axpy(1.0, g);
    let mut out = descend(x, &msgn(&b)?, eta);
    if lambda != 0.0 {
        out.axpy(-eta * lambda, x);
    }
    Ok((out, b))
}

fn check_weight(eta: f64, lambda: f64) -> Result<()> {
    if !(eta >= 0.0 && lambda > 0.0 && eta.is_finite() && lambda.is_finite()) {
        return Err(invalid(format!(
            "need eta >= 0 and lambda > 0, got eta = {eta}, lambda = {lambda}"
        )));
    }
    let product = lambda * eta;
    if product > 1.0 {
        return Err(Error::Schedule {
            iteration: 0,
            product,
        });
    }
    Ok(())
}

/// Weight-decay step `x − η (D + λx)`.
pub fn regularized_step(x: &Mat, direction: &Mat, eta: f64, lambda: f64) -> Result<Mat> {
    check_weight(eta, lambda)?;
    x.check_same_shape(direction)?;
    let mut out = x.clone();
    for (o, d) in out.data_mut().iter_mut().zip(direction.data()) {
        *o -= eta * (d + lambda * *o);
    }
    Ok(out)
}

/// The same step written as the Frank-Wolfe combination
/// `(1 − λη) x + λη (−D/λ)`.
pub fn frank_wolfe_form(x: &Mat, direction: &Mat, eta: f64, lambda: f64) -> Result<Mat> {
    check_weight(eta, lambda)?;
    x.check_same_shape(direction)?;
    let w = lambda * eta;
    let mut out = x.clone();
    for (o, d) in out.data_mut().iter_mut().zip(direction.data()) {
        *o = (1.0 - w) * *o + w * (-d / lambda);
    }
    Ok(out)
}
