//! One-way ANOVA with exact F p-values, and Tukey HSD comparisons.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::special::{self, regularized_incomplete_beta};
use crate::stats::{mean, StatsError};

/// Between/within decomposition for one grouping of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub df_factor: usize,
    pub df_error: usize,
    pub df_total: usize,
    pub ss_factor: f64,
    pub ss_error: f64,
    pub ss_total: f64,
    pub ms_factor: f64,
    pub ms_error: f64,
    /// Infinite when the groups have no within-group spread but differ.
    #[serde(with = "extended_float")]
    pub f: f64,
    pub p: f64,
    /// Set when `ss_error` is zero and F is not a proper ratio.
    pub degenerate: bool,
}

/// A rendered row of an [`AnovaTable`]; undefined cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow {
    pub source: &'static str,
    pub df: usize,
    pub ss: f64,
    pub ms: Option<f64>,
    pub f: Option<f64>,
    pub p: Option<f64>,
}

impl AnovaTable {
    pub fn rows(&self) -> [AnovaRow; 3] {
        [
            AnovaRow {
                source: "Factor",
                df: self.df_factor,
                ss: self.ss_factor,
                ms: Some(self.ms_factor),
                f: Some(self.f),
                p: Some(self.p),
            },
            AnovaRow {
                source: "Error",
                df: self.df_error,
                ss: self.ss_error,
                ms: Some(self.ms_error),
                f: None,
                p: None,
            },
            AnovaRow {
                source: "Total",
                df: self.df_total,
                ss: self.ss_total,
                ms: None,
                f: None,
                p: None,
            },
        ]
    }

    pub fn is_significant(&self, alpha: f64) -> bool {
        self.p < alpha
    }

    /// CSV with header `source,df,ss,ms,f,p`, six significant digits.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["source", "df", "ss", "ms", "f", "p"])?;
        let cell = |v: Option<f64>| v.map(significant6).unwrap_or_default();
        for row in self.rows() {
            w.write_record(&[
                row.source.to_string(),
                row.df.to_string(),
                significant6(row.ss),
                cell(row.ms),
                cell(row.f),
                cell(row.p),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Formats like C's `%.6g`.
pub fn significant6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// One-way ANOVA over `groups`.
///
/// ```
/// use robust_doe::anova::one_way_anova;
///
/// let t = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
/// assert_eq!((t.df_factor, t.df_error, t.df_total), (1, 4, 5));
/// assert!((t.ss_factor - 13.5).abs() < 1e-12);
/// ```
pub fn one_way_anova<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaTable, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::Degenerate(format!("ANOVA needs at least 2 groups, got {k}")));
    }
    if groups.iter().any(|g| g.as_ref().is_empty()) {
        return Err(StatsError::Degenerate("ANOVA groups must be non-empty".into()));
    }
    if groups.iter().flat_map(|g| g.as_ref()).any(|v| !v.is_finite()) {
        return Err(StatsError::Domain("ANOVA data must be finite".into()));
    }
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if n <= k {
        return Err(StatsError::Degenerate(format!(
            "ANOVA needs more observations ({n}) than groups ({k})"
        )));
    }

    let all: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    let grand = mean(&all);
    let mut ss_factor = 0.0;
    let mut ss_error = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = mean(g);
        ss_factor += g.len() as f64 * (m - grand).powi(2);
        ss_error += g.iter().map(|y| (y - m).powi(2)).sum::<f64>();
    }
    let ss_total: f64 = all.iter().map(|y| (y - grand).powi(2)).sum();

    let (df_factor, df_error) = (k - 1, n - k);
    let ms_factor = ss_factor / df_factor as f64;
    let ms_error = ss_error / df_error as f64;

    let (f, p, degenerate) = if ss_error == 0.0 {
        if ss_factor > 0.0 {
            (f64::INFINITY, 0.0, true)
        } else {
            (0.0, 1.0, true)
        }
    } else {
        let f = ms_factor / ms_error;
        let p = f_p_value(f, df_factor as f64, df_error as f64)
            .map_err(|e| StatsError::Domain(e.to_string()))?;
        (f, p, false)
    };

    Ok(AnovaTable {
        df_factor,
        df_error,
        df_total: n - 1,
        ss_factor,
        ss_error,
        ss_total,
        ms_factor,
        ms_error,
        f,
        p,
        degenerate,
    })
}

/// Upper-tail probability `P(F > f)` for `F ~ F(df1, df2)`.
///
/// ```
/// use robust_doe::anova::f_p_value;
///
/// assert_eq!(f_p_value(0.0, 3.0, 7.0).unwrap(), 1.0);
/// assert!((f_p_value(1.0, 10.0, 10.0).unwrap() - 0.5).abs() < 1e-12);
/// ```
pub fn f_p_value(f: f64, df1: f64, df2: f64) -> Result<f64, special::SpecialError> {
    if f.is_nan() || f < 0.0 {
        return Err(special::SpecialError::Domain("F statistic must be >= 0"));
    }
    if !(df1 > 0.0 && df2 > 0.0) {
        return Err(special::SpecialError::Domain("degrees of freedom must be positive"));
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let x = df2 / (df2 + df1 * f);
    regularized_incomplete_beta(x, 0.5 * df2, 0.5 * df1)
}

// Inner integral nodes for the normal-range CDF, shared by every call.
struct RangeNodes {
    weight_pdf: Vec<f64>,
    z: Vec<f64>,
    cdf: Vec<f64>,
    sf: Vec<f64>,
}

const RANGE_Z_LIMIT: f64 = 9.0;
const RANGE_Z_PANELS: usize = 10;
const CHI_PANELS: usize = 10;

fn range_nodes() -> &'static RangeNodes {
    static NODES: OnceLock<RangeNodes> = OnceLock::new();
    NODES.get_or_init(|| {
        let (nodes, weights) = special::gauss_legendre();
        let width = 2.0 * RANGE_Z_LIMIT / RANGE_Z_PANELS as f64;
        let mut out = RangeNodes {
            weight_pdf: Vec::new(),
            z: Vec::new(),
            cdf: Vec::new(),
            sf: Vec::new(),
        };
        for p in 0..RANGE_Z_PANELS {
            let mid = -RANGE_Z_LIMIT + (p as f64 + 0.5) * width;
            for (x, w) in nodes.iter().zip(weights) {
                let z = mid + 0.5 * width * x;
                out.z.push(z);
                out.weight_pdf.push(0.5 * width * w * special::normal_pdf(z));
                out.cdf.push(special::normal_cdf(z));
                out.sf.push(special::normal_sf(z));
            }
        }
        out
    })
}

/// `P(R < w)` for the range `R` of `k` independent standard normals.
fn normal_range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let nodes = range_nodes();
    let mut acc = 0.0;
    for i in 0..nodes.z.len() {
        let z = nodes.z[i];
        let band = if z >= 0.0 {
            nodes.sf[i] - special::normal_sf(z + w)
        } else {
            special::normal_cdf(z + w) - nodes.cdf[i]
        };
        if band > 0.0 {
            acc += nodes.weight_pdf[i] * band.powi(k as i32 - 1);
        }
    }
    (k as f64 * acc).clamp(0.0, 1.0)
}

/// CDF of the studentized range `Q` for `k` groups and `df` error degrees of
/// freedom. `df = f64::INFINITY` gives the range of standard normals.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> Result<f64, StatsError> {
    if k < 2 {
        return Err(StatsError::Domain("studentized range needs k >= 2".into()));
    }
    if df.is_nan() || df < 1.0 {
        return Err(StatsError::Domain("studentized range needs df >= 1".into()));
    }
    if q.is_nan() {
        return Err(StatsError::Domain("q must be a number".into()));
    }
    if q <= 0.0 {
        return Ok(0.0);
    }
    if df.is_infinite() {
        return Ok(normal_range_cdf(q, k));
    }

    // s = sqrt(chi2_df / df); integrate its density against the normal range
    let half = 0.5 * df;
    let ln_norm = half * half.ln() + std::f64::consts::LN_2 - special::ln_gamma(half);
    let lo = (1.0 - 9.0 / df.sqrt()).max(0.0);
    let hi = 1.0 + 9.0 / df.sqrt();
    let integral = special::integrate(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let ln_density = ln_norm + (df - 1.0) * s.ln() - half * s * s;
            ln_density.exp() * normal_range_cdf(q * s, k)
        },
        lo,
        hi,
        CHI_PANELS,
    );
    Ok(integral.clamp(0.0, 1.0))
}

/// Critical value `q` with `P(Q > q) = alpha`, found by the Illinois
/// variant of regula falsi.
///
/// ```
/// let q = robust_doe::anova::studentized_range_q(0.05, 3, 24.0).unwrap();
/// assert!((q - 3.532).abs() < 0.005);
/// ```
pub fn studentized_range_q(alpha: f64, k: usize, df: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::Domain("alpha must lie in (0, 1)".into()));
    }
    let target = 1.0 - alpha;
    let g = |q: f64| studentized_range_cdf(q, k, df).map(|c| c - target);
    let (mut lo, mut g_lo) = (0.0, -target);
    let mut hi = 2.0;
    let mut g_hi = g(hi)?;
    while g_hi < 0.0 {
        (lo, g_lo) = (hi, g_hi);
        hi *= 2.0;
        if hi > 1e6 {
            return Err(StatsError::Domain("studentized range quantile out of reach".into()));
        }
        g_hi = g(hi)?;
    }
    // g_lo < 0 <= g_hi throughout
    let mut side = 0;
    for _ in 0..200 {
        let q = hi - g_hi * (hi - lo) / (g_hi - g_lo);
        let g_q = g(q)?;
        if g_q == 0.0 || (hi - lo) < 1e-9 {
            return Ok(q);
        }
        if g_q < 0.0 {
            (lo, g_lo) = (q, g_q);
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            (hi, g_hi) = (q, g_q);
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
        if (hi - lo) < 1e-9 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    /// 1-based group (level) indices, `first < second`.
    pub first: usize,
    pub second: usize,
    /// Mean of `first` minus mean of `second`.
    pub mean_diff: f64,
    pub hsd_threshold: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub alpha: f64,
    pub q_critical: f64,
    pub ms_error: f64,
    pub group_size: usize,
    pub df_error: usize,
    pub means: Vec<f64>,
    pub pairs: Vec<TukeyPair>,
}

/// Tukey HSD over equal-size groups.
pub fn tukey_hsd<G: AsRef<[f64]>>(groups: &[G], alpha: f64) -> Result<TukeyResult, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::Domain("alpha must lie in (0, 1)".into()));
    }
    let sizes: Vec<usize> = groups.iter().map(|g| g.as_ref().len()).collect();
    if sizes.windows(2).any(|w| w[0] != w[1]) {
        return Err(StatsError::UnequalGroups(sizes));
    }
    let table = one_way_anova(groups)?;
    let n = sizes[0];
    let k = groups.len();
    let q_critical = studentized_range_q(alpha, k, table.df_error as f64)?;
    let hsd = q_critical * (table.ms_error / n as f64).sqrt();
    let means: Vec<f64> = groups.iter().map(|g| mean(g.as_ref())).collect();

    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = means[i] - means[j];
            pairs.push(TukeyPair {
                first: i + 1,
                second: j + 1,
                mean_diff: diff,
                hsd_threshold: hsd,
                significant: diff.abs() > hsd,
            });
        }
    }
    Ok(TukeyResult {
        alpha,
        q_critical,
        ms_error: table.ms_error,
        group_size: n,
        df_error: table.df_error,
        means,
        pairs,
    })
}

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`.
mod extended_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("invalid float `{other}`"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_group_means() {
        let t = one_way_anova(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(t.ss_factor, 0.0);
        assert_eq!(t.f, 0.0);
        assert_eq!(t.p, 1.0);
        assert!(!t.degenerate);
    }

    #[test]
    fn noiseless_groups_give_infinite_f() {
        let t = one_way_anova(&[[1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert!(t.f.is_infinite());
        assert_eq!(t.p, 0.0);
        assert!(t.degenerate);

        let t = one_way_anova(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!((t.f, t.p, t.degenerate), (0.0, 1.0, true));
    }

    #[test]
    fn degenerate_shapes() {
        assert!(matches!(one_way_anova(&[[1.0, 2.0]]), Err(StatsError::Degenerate(_))));
        assert!(matches!(one_way_anova(&[[1.0], [2.0]]), Err(StatsError::Degenerate(_))));
        let empty: [&[f64]; 2] = [&[1.0, 2.0], &[]];
        assert!(matches!(one_way_anova(&empty), Err(StatsError::Degenerate(_))));
        assert!(matches!(
            one_way_anova(&[[1.0, f64::NAN], [2.0, 3.0]]),
            Err(StatsError::Domain(_))
        ));
    }

    #[test]
    fn f_p_value_trivial_points() {
        assert_eq!(f_p_value(0.0, 1.0, 1.0).unwrap(), 1.0);
        assert!((f_p_value(1.0, 10.0, 10.0).unwrap() - 0.5).abs() < 1e-13);
        assert!((f_p_value(0.04, 2.0, 24.0).unwrap() - 0.96).abs() < 0.005);
        assert!(f_p_value(515.63, 2.0, 24.0).unwrap() < 1e-15);
        assert!(f_p_value(-1.0, 2.0, 3.0).is_err());
        assert!(f_p_value(1.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn f_p_value_closed_forms() {
        // df1 = 2: P = (d2 / (d2 + 2f))^(d2/2); df2 = 2: P = 1 - (d1 f / (2 + d1 f))^(d1/2)
        for &f in &[0.01f64, 0.3, 1.0, 4.0, 80.0] {
            for &d in &[1.0f64, 3.0, 24.0, 50.0] {
                let exact = (d / (d + 2.0 * f)).powf(d / 2.0);
                assert!((f_p_value(f, 2.0, d).unwrap() - exact).abs() < 1e-13, "f={f} d2={d}");
                let exact = 1.0 - (d * f / (2.0 + d * f)).powf(d / 2.0);
                assert!((f_p_value(f, d, 2.0).unwrap() - exact).abs() < 1e-13, "f={f} d1={d}");
            }
        }
    }

    #[test]
    fn normal_range_cdf_two_groups() {
        // range of two normals is |Z1 - Z2| ~ sqrt(2)|Z|
        for &w in &[0.5, 1.0, 2.772, 4.0] {
            let exact = 2.0 * special::normal_cdf(w / 2f64.sqrt()) - 1.0;
            assert!((normal_range_cdf(w, 2) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn q_critical_values() {
        let q = studentized_range_q(0.05, 3, 24.0).unwrap();
        assert!((q - 3.532).abs() < 0.005, "{q}");
        // k = 2 with infinite df: sqrt(2) * z_{0.975}
        let q = studentized_range_q(0.05, 2, f64::INFINITY).unwrap();
        assert!((q - 1.959_963_984_540_054 * 2f64.sqrt()).abs() < 1e-6, "{q}");
        let q = studentized_range_q(0.05, 2, 1e6).unwrap();
        assert!((q - 2.772).abs() < 1e-3, "{q}");
        let q = studentized_range_q(1.0 - 1e-9, 3, 24.0).unwrap();
        assert!(q < 1e-3, "{q}");
        assert!(studentized_range_q(0.0, 3, 24.0).is_err());
        assert!(studentized_range_q(0.05, 1, 24.0).is_err());
        assert!(studentized_range_q(0.05, 3, 0.5).is_err());
    }

    #[test]
    fn tukey_identical_groups() {
        let g = [[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]];
        let r = tukey_hsd(&g, 0.05).unwrap();
        assert_eq!(r.pairs.len(), 3);
        assert!(r.pairs.iter().all(|p| !p.significant));
    }

    #[test]
    fn tukey_rejects_unequal_groups() {
        let g: [&[f64]; 2] = [&[1.0, 2.0, 3.0], &[1.0, 2.0]];
        assert_eq!(tukey_hsd(&g, 0.05).unwrap_err(), StatsError::UnequalGroups(vec![3, 2]));
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(significant6(216.826762962963), "216.827");
        assert_eq!(significant6(0.043899239), "0.0438992");
        assert_eq!(significant6(26.0), "26");
        assert_eq!(significant6(1.869e-20), "1.869e-20");
        assert_eq!(significant6(1234567.0), "1.23457e+06");
        assert_eq!(significant6(f64::INFINITY), "inf");
        assert_eq!(significant6(0.0), "0");
    }

    #[test]
    fn infinite_f_survives_json() {
        let t = one_way_anova(&[[1.0, 1.0], [2.0, 2.0]]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"f\":\"inf\""), "{json}");
        let back: AnovaTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
