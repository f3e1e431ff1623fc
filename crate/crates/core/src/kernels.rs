//! Dense numeric kernels used by the batched network evaluator.
//!
//! Matrices are row-major `&[f64]` buffers with explicit dimensions.

// Polynomial coefficients are kept as published; GEMM signatures follow BLAS.
#![allow(clippy::excessive_precision, clippy::too_many_arguments)]

/// `e^y` for `y <= 0`, accurate to a few ulp, written branch-free so the
/// slice loops below vectorize.
#[inline(always)]
fn exp_nonpositive(y: f64) -> f64 {
    const MAGIC: f64 = 6755399441055744.0; // 1.5 * 2^52
    const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
    let y = if y < -700.0 { -700.0 } else { y };
    let shifted = y * std::f64::consts::LOG2_E + MAGIC;
    let n = shifted - MAGIC;
    let r = y - n * LN2_HI - n * LN2_LO;
    // Taylor series to degree 12 on |r| <= ln2 / 2.
    let mut p = 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    // The low mantissa bits of `shifted` hold n in two's complement.
    let scale = f64::from_bits(shifted.to_bits().wrapping_add(1023) << 52);
    p * scale
}

/// Hyperbolic tangent with relative error below 1e-15.
///
/// Rational approximation for |x| <= 0.625, `(1 - e^{-2|x|}) / (1 + e^{-2|x|})`
/// beyond. Both branches are computed and selected so the loop stays SIMD.
#[inline(always)]
pub fn tanh(x: f64) -> f64 {
    let ax = x.abs();
    let e = exp_nonpositive(-2.0 * ax);
    let z = x * x;
    let p = (-9.643_991_794_250_522_386_28e-1 * z - 9.928_772_310_019_185_865_64e1) * z
        - 1.614_687_684_417_084_479_52e3;
    let q = ((z + 1.128_116_784_916_329_314_02e2) * z + 2.235_488_390_601_004_485_83e3) * z
        + 4.844_063_053_251_254_860_48e3;
    let large = ax > 0.625;
    let signed = if x < 0.0 { e - 1.0 } else { 1.0 - e };
    let num = if large { signed } else { x * z * p };
    let den = if large { 1.0 + e } else { q };
    let base = if large { 0.0 } else { x };
    base + num / den
}

#[inline(always)]
fn tanh_inplace_portable(xs: &mut [f64]) {
    let mut chunks = xs.chunks_exact_mut(8);
    for c in &mut chunks {
        for v in c.iter_mut() {
            *v = tanh(*v);
        }
    }
    for v in chunks.into_remainder() {
        *v = tanh(*v);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma,avx512f,avx512dq,avx512vl")]
unsafe fn tanh_inplace_avx512(xs: &mut [f64]) {
    tanh_inplace_portable(xs)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn tanh_inplace_avx2(xs: &mut [f64]) {
    tanh_inplace_portable(xs)
}

/// Applies [`tanh`] elementwise, dispatching on CPU features at runtime.
///
/// Rust never contracts `a * b + c` into FMA, so every path yields
/// bit-identical results.
pub fn tanh_inplace(xs: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f")
            && std::arch::is_x86_feature_detected!("avx512dq")
            && std::arch::is_x86_feature_detected!("avx512vl")
        {
            // SAFETY: features checked above.
            return unsafe { tanh_inplace_avx512(xs) };
        }
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
        {
            // SAFETY: features checked above.
            return unsafe { tanh_inplace_avx2(xs) };
        }
    }
    tanh_inplace_portable(xs)
}

/// `c = alpha * a(m×k) · b(k×n) + beta * c`.
pub fn gemm_nn(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: bounds asserted above; strides describe dense row-major storage.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, alpha,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `c = alpha * a(m×k) · b(n×k)ᵀ + beta * c`.
pub fn gemm_nt(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    // SAFETY: as above, with `b` read through transposed strides.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, alpha,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), 1, k as isize,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `c = alpha * a(k×m)ᵀ · b(k×n) + beta * c`.
pub fn gemm_tn(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= k * m && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: as above, with `a` read through transposed strides.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, alpha,
            a.as_ptr(), 1, m as isize,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
