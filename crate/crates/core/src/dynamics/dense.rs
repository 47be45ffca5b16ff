//! Allocation-free kernels on column-major `d × d` slices for the integrator
//! inner loops.

/// `out = a b`
pub(crate) fn mul(d: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for j in 0..d {
        let oc = &mut out[j * d..(j + 1) * d];
        for k in 0..d {
            let bkj = b[k + j * d];
            if bkj == 0.0 {
                continue;
            }
            let ac = &a[k * d..(k + 1) * d];
            for (o, x) in oc.iter_mut().zip(ac) {
                *o += x * bkj;
            }
        }
    }
}

/// `out = aᵀ b`
pub(crate) fn tr_mul(d: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for j in 0..d {
        let bc = &b[j * d..(j + 1) * d];
        for i in 0..d {
            let ac = &a[i * d..(i + 1) * d];
            out[i + j * d] = ac.iter().zip(bc).map(|(x, y)| x * y).sum();
        }
    }
}

/// `out = a diag(s) bᵀ`
pub(crate) fn mul_diag_tr(d: usize, a: &[f64], s: &[f64], b: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for k in 0..d {
        let sk = s[k];
        if sk == 0.0 {
            continue;
        }
        let ac = &a[k * d..(k + 1) * d];
        for j in 0..d {
            let f = sk * b[j + k * d];
            let oc = &mut out[j * d..(j + 1) * d];
            for (o, x) in oc.iter_mut().zip(ac) {
                *o += x * f;
            }
        }
    }
}

/// Modified Gram–Schmidt on the columns; the implied `R` has a positive
/// diagonal, so columns keep their orientation.
pub(crate) fn orthonormalize(d: usize, q: &mut [f64]) {
    for j in 0..d {
        for k in 0..j {
            let (head, tail) = q.split_at_mut(j * d);
            let qk = &head[k * d..(k + 1) * d];
            let qj = &mut tail[..d];
            let r: f64 = qk.iter().zip(qj.iter()).map(|(a, b)| a * b).sum();
            for (x, y) in qj.iter_mut().zip(qk) {
                *x -= r * y;
            }
        }
        let col = &mut q[j * d..(j + 1) * d];
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in col.iter_mut() {
            *x /= norm;
        }
    }
}

pub(crate) fn swap_columns(d: usize, m: &mut [f64], a: usize, b: usize) {
    for r in 0..d {
        m.swap(r + a * d, r + b * d);
    }
}
