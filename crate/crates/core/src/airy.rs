//! Real Airy functions `Ai`, `Bi` and their derivatives.
//!
//! Three regimes: a compensated Maclaurin series for `|t| <= 1`, Taylor
//! expansion about the nodes of a precomputed table on `1 < |t| <= 12`, and
//! the large-argument asymptotic series beyond. The table is filled once by
//! stepping the Airy equation `y'' = t y` with high-order Taylor steps, `Ai`
//! from `t = 12` downwards and `Bi` from `t = -12` upwards, so each is
//! propagated in the direction in which it grows.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

use thiserror::Error;

/// `Ai(0) = 3^{-2/3} / Γ(2/3)`.
pub const AI0: f64 = 0.355_028_053_887_817_2;
/// `Ai'(0) = -3^{-1/3} / Γ(1/3)`.
pub const AIP0: f64 = -0.258_819_403_792_806_8;
/// `Bi(0) = √3 Ai(0)`.
pub const BI0: f64 = 0.614_926_627_446_000_8;
/// `Bi'(0) = -√3 Ai'(0)`.
pub const BIP0: f64 = 0.448_288_357_353_826_4;

const SERIES_RADIUS: f64 = 1.0;
/// Beyond this the asymptotic series is accurate to machine precision.
pub const ASYMPTOTIC_RADIUS: f64 = 12.0;
const TABLE_STEPS_PER_UNIT: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValues {
    pub ai: f64,
    pub aip: f64,
    pub bi: f64,
    pub bip: f64,
}

impl AiryValues {
    /// `Ai Bi' - Ai' Bi`, which equals `1/π`.
    #[must_use]
    pub fn wronskian(&self) -> f64 {
        self.ai * self.bip - self.aip * self.bi
    }
}

/// Airy values with the exponential behaviour removed for `t > 0`:
/// `Ai·e^ζ`, `Ai'·e^ζ`, `Bi·e^-ζ`, `Bi'·e^-ζ` where `ζ = (2/3) t^{3/2}`.
/// For `t <= 0`, `zeta` is zero and the values are unscaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledAiry {
    pub values: AiryValues,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AiryError {
    #[error("Bi overflows at t = {t}; ln Bi = {log_bi}")]
    Overflow { t: f64, log_bi: f64 },
    #[error("non-finite Airy argument {0}")]
    NonFinite(f64),
}

/// Unscaled Airy values. Fails only when `Bi` overflows (`t` above about 104).
pub fn airy(t: f64) -> Result<AiryValues, AiryError> {
    if !t.is_finite() {
        return Err(AiryError::NonFinite(t));
    }
    if t < -ASYMPTOTIC_RADIUS {
        return Ok(asymptotic_negative(-t));
    }
    if t <= ASYMPTOTIC_RADIUS {
        return Ok(airy_unscaled_core(t));
    }
    let s = airy_scaled(t);
    let grow = s.zeta.exp();
    let v = AiryValues {
        ai: s.values.ai / grow,
        aip: s.values.aip / grow,
        bi: s.values.bi * grow,
        bip: s.values.bip * grow,
    };
    if v.bi.is_finite() && v.bip.is_finite() {
        Ok(v)
    } else {
        Err(AiryError::Overflow { t, log_bi: s.values.bi.ln() + s.zeta })
    }
}

/// Exponentially scaled Airy values; never overflows for finite `t`.
#[must_use]
pub fn airy_scaled(t: f64) -> ScaledAiry {
    if t <= 0.0 {
        let values = if t >= -ASYMPTOTIC_RADIUS { airy_unscaled_core(t) } else { asymptotic_negative(-t) };
        return ScaledAiry { values, zeta: 0.0 };
    }
    let zeta = 2.0 / 3.0 * t * t.sqrt();
    if t > ASYMPTOTIC_RADIUS {
        return ScaledAiry { values: asymptotic_positive_scaled(t), zeta };
    }
    let v = airy_unscaled_core(t);
    let (up, down) = (zeta.exp(), (-zeta).exp());
    ScaledAiry {
        values: AiryValues { ai: v.ai * up, aip: v.aip * up, bi: v.bi * down, bip: v.bip * down },
        zeta,
    }
}

fn airy_unscaled_core(t: f64) -> AiryValues {
    if t.abs() <= SERIES_RADIUS {
        maclaurin(t)
    } else {
        table().eval(t)
    }
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// `Ai = c1 f - c2 g`, `Bi = √3 (c1 f + c2 g)` with the two power series
/// `f = Σ 3^k (1/3)_k t^{3k} / (3k)!`, `g = Σ 3^k (2/3)_k t^{3k+1} / (3k+1)!`.
fn maclaurin(t: f64) -> AiryValues {
    let t3 = t * t * t;
    let (mut f, mut fp, mut g, mut gp) =
        (Kahan::default(), Kahan::default(), Kahan::default(), Kahan::default());
    let (mut fk, mut fpk, mut gk, mut gpk) = (1.0, t * t / 2.0, t, 1.0);
    f.add(fk);
    g.add(gk);
    gp.add(gpk);
    for k in 1..60 {
        let kf = k as f64;
        fk *= t3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        gk *= t3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        if k > 1 {
            fpk *= t3 / (3.0 * (kf - 1.0) * (3.0 * kf - 1.0));
        }
        gpk *= t3 / ((3.0 * kf - 2.0) * (3.0 * kf));
        f.add(fk);
        fp.add(fpk);
        g.add(gk);
        gp.add(gpk);
        if fk.abs().max(gk.abs()).max(fpk.abs()).max(gpk.abs()) < 1e-20 {
            break;
        }
    }
    let (c1, c2) = (AI0, -AIP0);
    let s3 = 3f64.sqrt();
    AiryValues {
        ai: c1 * f.sum - c2 * g.sum,
        aip: c1 * fp.sum - c2 * gp.sum,
        bi: s3 * (c1 * f.sum + c2 * g.sum),
        bip: s3 * (c1 * fp.sum + c2 * gp.sum),
    }
}

/// Solution of `y'' = t y` at `t0 + s` from `(y, y')` at `t0`.
fn taylor_step(t0: f64, y: f64, yp: f64, s: f64) -> (f64, f64) {
    // y(t0 + s) = Σ a_k s^k, a_{k+2} = (t0 a_k + a_{k-1}) / ((k+1)(k+2))
    let (mut a_km1, mut a_k, mut a_kp1) = (0.0, y, yp);
    let mut val = Kahan::default();
    let mut der = Kahan::default();
    val.add(y);
    let mut sk = 1.0; // s^k
    let mut small = 0;
    for k in 0..80 {
        let a_kp2 = (t0 * a_k + a_km1) / ((k as f64 + 1.0) * (k as f64 + 2.0));
        // add the (k+1) term to value, derivative gets (k+1) a_{k+1} s^k
        let skp1 = sk * s;
        let tv = a_kp1 * skp1;
        let td = (k as f64 + 1.0) * a_kp1 * sk;
        val.add(tv);
        der.add(td);
        if tv.abs() <= 1e-19 * val.sum.abs() && td.abs() <= 1e-19 * der.sum.abs() {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
        a_km1 = a_k;
        a_k = a_kp1;
        a_kp1 = a_kp2;
        sk = skp1;
    }
    (val.sum, der.sum)
}

struct AiryTable {
    ai: Vec<(f64, f64)>,
    bi: Vec<(f64, f64)>,
}

impl AiryTable {
    fn node(i: usize) -> f64 {
        -ASYMPTOTIC_RADIUS + i as f64 / TABLE_STEPS_PER_UNIT
    }

    fn build() -> Self {
        let n = (2.0 * ASYMPTOTIC_RADIUS * TABLE_STEPS_PER_UNIT).round() as usize + 1;
        let h = 1.0 / TABLE_STEPS_PER_UNIT;
        let mut ai = vec![(0.0, 0.0); n];
        let mut bi = vec![(0.0, 0.0); n];

        let top = asymptotic_positive_scaled(ASYMPTOTIC_RADIUS);
        let decay = (-(2.0 / 3.0) * ASYMPTOTIC_RADIUS.powf(1.5)).exp();
        ai[n - 1] = (top.ai * decay, top.aip * decay);
        for i in (0..n - 1).rev() {
            let (y, yp) = ai[i + 1];
            ai[i] = taylor_step(Self::node(i + 1), y, yp, -h);
        }

        let bottom = asymptotic_negative(ASYMPTOTIC_RADIUS);
        bi[0] = (bottom.bi, bottom.bip);
        for i in 1..n {
            let (y, yp) = bi[i - 1];
            bi[i] = taylor_step(Self::node(i - 1), y, yp, h);
        }
        Self { ai, bi }
    }

    fn eval(&self, t: f64) -> AiryValues {
        let pos = ((t + ASYMPTOTIC_RADIUS) * TABLE_STEPS_PER_UNIT).round();
        let i = (pos.max(0.0) as usize).min(self.ai.len() - 1);
        let t0 = Self::node(i);
        let s = t - t0;
        let (ai, aip) = taylor_step(t0, self.ai[i].0, self.ai[i].1, s);
        let (bi, bip) = taylor_step(t0, self.bi[i].0, self.bi[i].1, s);
        AiryValues { ai, aip, bi, bip }
    }
}

fn table() -> &'static AiryTable {
    static TABLE: OnceLock<AiryTable> = OnceLock::new();
    TABLE.get_or_init(AiryTable::build)
}

/// Coefficients `u_k`, `v_k` of the large-argument expansions, summed against
/// `ζ^{-k}` until the terms stop decreasing or drop below round-off.
fn asymptotic_sums(zeta: f64, alternate: bool) -> (f64, f64) {
    let mut u = 1.0;
    let mut su = Kahan::default();
    let mut sv = Kahan::default();
    su.add(1.0);
    sv.add(1.0);
    let mut zk = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        zk /= zeta;
        let sign = if alternate && k % 2 == 1 { -1.0 } else { 1.0 };
        let (tu, tv) = (sign * u * zk, sign * v * zk);
        let size = tu.abs().max(tv.abs());
        if size > prev {
            break;
        }
        su.add(tu);
        sv.add(tv);
        if size < 1e-17 {
            break;
        }
        prev = size;
    }
    (su.sum, sv.sum)
}

fn asymptotic_positive_scaled(t: f64) -> AiryValues {
    let zeta = 2.0 / 3.0 * t * t.sqrt();
    let q = t.sqrt().sqrt();
    let rpi = PI.sqrt();
    let (ua, va) = asymptotic_sums(zeta, true);
    let (ub, vb) = asymptotic_sums(zeta, false);
    AiryValues {
        ai: ua / (2.0 * rpi * q),
        aip: -q * va / (2.0 * rpi),
        bi: ub / (rpi * q),
        bip: q * vb / rpi,
    }
}

/// `Ai(-x)`, `Ai'(-x)`, `Bi(-x)`, `Bi'(-x)` for large `x > 0`.
fn asymptotic_negative(x: f64) -> AiryValues {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let q = x.sqrt().sqrt();
    let rpi = PI.sqrt();
    // Even and odd parts of the alternating sums Σ (-1)^k u_{2k} ζ^{-2k}, Σ (-1)^k u_{2k+1} ζ^{-2k-1}.
    let mut u = 1.0;
    let (mut ue, mut uo, mut ve, mut vo) =
        (Kahan::default(), Kahan::default(), Kahan::default(), Kahan::default());
    ue.add(1.0);
    ve.add(1.0);
    let mut zk = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        zk /= zeta;
        let sign = if (k / 2) % 2 == 1 { -1.0 } else { 1.0 };
        let (tu, tv) = (sign * u * zk, sign * v * zk);
        let size = tu.abs().max(tv.abs());
        if size > prev {
            break;
        }
        if k % 2 == 0 {
            ue.add(tu);
            ve.add(tv);
        } else {
            uo.add(tu);
            vo.add(tv);
        }
        if size < 1e-17 {
            break;
        }
        prev = size;
    }
    let (s, c) = (zeta - FRAC_PI_4).sin_cos();
    AiryValues {
        ai: (c * ue.sum + s * uo.sum) / (rpi * q),
        aip: q * (s * ve.sum - c * vo.sum) / rpi,
        bi: (-s * ue.sum + c * uo.sum) / (rpi * q),
        bip: q * (c * ve.sum + s * vo.sum) / rpi,
    }
}
