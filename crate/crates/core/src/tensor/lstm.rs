use super::ops::sigmoid_scalar;
use super::{mismatch, Tensor, TensorError};

/// Single-layer LSTM weights, gate blocks ordered input, forget, cell, output.
#[derive(Debug, Clone, Copy)]
pub struct LstmParams<'a> {
    /// `I×4H`
    pub w_ih: &'a Tensor,
    /// `H×4H`
    pub w_hh: &'a Tensor,
    /// `4H`
    pub b: &'a Tensor,
}

impl LstmParams<'_> {
    pub fn hidden(&self) -> usize {
        self.w_hh.rows()
    }
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Tensor,
    h: Tensor,
    c: Tensor,
    /// post-activation gates `B×4H`
    gates: Tensor,
    tanh_c: Tensor,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub x: Tensor,
    pub h: Tensor,
    pub c: Tensor,
    pub w_ih: Tensor,
    pub w_hh: Tensor,
    pub b: Tensor,
}

pub fn lstm_step(
    x: &Tensor,
    h: &Tensor,
    c: &Tensor,
    p: LstmParams<'_>,
) -> Result<(Tensor, Tensor, LstmCache), TensorError> {
    let hd = p.hidden();
    let bsz = x.rows();
    if p.w_hh.cols() != 4 * hd
        || p.w_ih.cols() != 4 * hd
        || p.w_ih.rows() != x.cols()
        || p.b.len() != 4 * hd
        || h.shape() != [bsz, hd]
        || c.shape() != [bsz, hd]
    {
        return Err(mismatch(format!(
            "lstm_step: x {:?}, h {:?}, c {:?}, W_ih {:?}, W_hh {:?}",
            x.shape(),
            h.shape(),
            c.shape(),
            p.w_ih.shape(),
            p.w_hh.shape()
        )));
    }
    let mut gates = x.matmul(p.w_ih)?.add(&h.matmul(p.w_hh)?)?;
    let mut c_new = Tensor::zeros(&[bsz, hd]);
    let mut h_new = Tensor::zeros(&[bsz, hd]);
    let mut tanh_c = Tensor::zeros(&[bsz, hd]);
    for r in 0..bsz {
        let row = gates.row_mut(r);
        for (k, v) in row.iter_mut().enumerate() {
            let pre = *v + p.b.data()[k];
            *v = if (2 * hd..3 * hd).contains(&k) { pre.tanh() } else { sigmoid_scalar(pre) };
        }
        for j in 0..hd {
            let (i, f, g, o) = (row[j], row[hd + j], row[2 * hd + j], row[3 * hd + j]);
            let cn = f * c.get(r, j) + i * g;
            let t = cn.tanh();
            c_new.set(r, j, cn);
            tanh_c.set(r, j, t);
            h_new.set(r, j, o * t);
        }
    }
    let cache = LstmCache { x: x.clone(), h: h.clone(), c: c.clone(), gates, tanh_c };
    Ok((h_new, c_new, cache))
}

/// Backward through one step given gradients w.r.t. the new hidden and cell states.
pub fn lstm_step_backward(
    cache: &LstmCache,
    p: LstmParams<'_>,
    grad_h: &Tensor,
    grad_c: &Tensor,
) -> Result<LstmGrads, TensorError> {
    let hd = p.hidden();
    let bsz = cache.x.rows();
    if grad_h.shape() != [bsz, hd] || grad_c.shape() != [bsz, hd] {
        return Err(mismatch("lstm_step_backward"));
    }
    let mut dpre = Tensor::zeros(&[bsz, 4 * hd]);
    let mut dc_prev = Tensor::zeros(&[bsz, hd]);
    for r in 0..bsz {
        let gr = cache.gates.row(r);
        for j in 0..hd {
            let (i, f, g, o) = (gr[j], gr[hd + j], gr[2 * hd + j], gr[3 * hd + j]);
            let t = cache.tanh_c.get(r, j);
            let dh = grad_h.get(r, j);
            let dc = grad_c.get(r, j) + dh * o * (1.0 - t * t);
            let row = dpre.row_mut(r);
            row[j] = dc * g * i * (1.0 - i);
            row[hd + j] = dc * cache.c.get(r, j) * f * (1.0 - f);
            row[2 * hd + j] = dc * i * (1.0 - g * g);
            row[3 * hd + j] = dh * t * o * (1.0 - o);
            dc_prev.set(r, j, dc * f);
        }
    }
    Ok(LstmGrads {
        x: dpre.matmul_nt(p.w_ih)?,
        h: dpre.matmul_nt(p.w_hh)?,
        c: dc_prev,
        w_ih: cache.x.matmul_tn(&dpre)?,
        w_hh: cache.h.matmul_tn(&dpre)?,
        b: dpre.sum_rows()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ops::tests::{numeric_grad, random, rel_err};

    #[test]
    fn zero_parameters_are_analytically_forced() {
        let (wi, wh, b) = (Tensor::zeros(&[3, 8]), Tensor::zeros(&[2, 8]), Tensor::zeros(&[8]));
        let p = LstmParams { w_ih: &wi, w_hh: &wh, b: &b };
        let x = random(&[1, 3], 1);
        let c = Tensor::matrix(1, 2, vec![0.7, -1.3]).unwrap();
        let (h1, c1, _) = lstm_step(&x, &Tensor::zeros(&[1, 2]), &c, p).unwrap();
        for j in 0..2 {
            assert!((c1.get(0, j) - 0.5 * c.get(0, j)).abs() < 1e-15);
            assert!((h1.get(0, j) - 0.5 * (0.5 * c.get(0, j)).tanh()).abs() < 1e-15);
        }
        let (h0, c0, _) =
            lstm_step(&Tensor::zeros(&[1, 3]), &Tensor::zeros(&[1, 2]), &Tensor::zeros(&[1, 2]), p).unwrap();
        assert!(h0.data().iter().chain(c0.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let (wi, wh, b) = (Tensor::zeros(&[3, 8]), Tensor::zeros(&[2, 8]), Tensor::zeros(&[8]));
        let p = LstmParams { w_ih: &wi, w_hh: &wh, b: &b };
        assert!(lstm_step(&Tensor::zeros(&[1, 4]), &Tensor::zeros(&[1, 2]), &Tensor::zeros(&[1, 2]), p).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (bsz, i, hd) = (2, 3, 4);
        let (wi, wh, b) = (random(&[i, 4 * hd], 31), random(&[hd, 4 * hd], 32), random(&[4 * hd], 33));
        let (x, h, c) = (random(&[bsz, i], 34), random(&[bsz, hd], 35), random(&[bsz, hd], 36));
        let (gh, gc) = (random(&[bsz, hd], 37), random(&[bsz, hd], 38));
        // loss = <h', gh> + <c', gc>; stack outputs column-wise for the numeric helper
        let stacked = |wi: &Tensor, wh: &Tensor, b: &Tensor, x: &Tensor, h: &Tensor, c: &Tensor| {
            let (h1, c1, _) = lstm_step(x, h, c, LstmParams { w_ih: wi, w_hh: wh, b }).unwrap();
            Tensor::new(vec![2 * h1.len()], h1.data().iter().chain(c1.data()).copied().collect()).unwrap()
        };
        let weights = Tensor::new(vec![2 * gh.len()], gh.data().iter().chain(gc.data()).copied().collect()).unwrap();
        let (_, _, cache) = lstm_step(&x, &h, &c, LstmParams { w_ih: &wi, w_hh: &wh, b: &b }).unwrap();
        let g = lstm_step_backward(&cache, LstmParams { w_ih: &wi, w_hh: &wh, b: &b }, &gh, &gc).unwrap();
        assert!(rel_err(&g.w_ih, &numeric_grad(&wi, &weights, |t| stacked(t, &wh, &b, &x, &h, &c))) < 1e-5);
        assert!(rel_err(&g.w_hh, &numeric_grad(&wh, &weights, |t| stacked(&wi, t, &b, &x, &h, &c))) < 1e-5);
        assert!(rel_err(&g.b, &numeric_grad(&b, &weights, |t| stacked(&wi, &wh, t, &x, &h, &c))) < 1e-5);
        assert!(rel_err(&g.x, &numeric_grad(&x, &weights, |t| stacked(&wi, &wh, &b, t, &h, &c))) < 1e-5);
        assert!(rel_err(&g.h, &numeric_grad(&h, &weights, |t| stacked(&wi, &wh, &b, &x, t, &c))) < 1e-5);
        assert!(rel_err(&g.c, &numeric_grad(&c, &weights, |t| stacked(&wi, &wh, &b, &x, &h, t))) < 1e-5);
    }
}
