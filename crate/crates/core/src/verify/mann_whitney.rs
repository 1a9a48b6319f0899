//! Mann-Whitney U rank-sum test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest combined sample size handled by exact enumeration.
pub const EXACT_MAX_TOTAL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample: the number of (a, b) pairs with
    /// a > b, ties counting one half.
    pub u: f64,
    pub u_b: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub method: PMethod,
}

/// Midranks of the pooled sample plus the tie-group sizes.
fn ranks(a: &[f64], b: &[f64]) -> (f64, Vec<usize>) {
    let mut all: Vec<(f64, bool)> = a.iter().map(|&x| (x, true)).chain(b.iter().map(|&x| (x, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut rank_sum_a = 0.0;
    let mut ties = Vec::new();
    let mut k = 0;
    while k < all.len() {
        let mut e = k + 1;
        while e < all.len() && all[e].0 == all[k].0 {
            e += 1;
        }
        // ranks k+1 ..= e share their mean
        let mid = (k + 1 + e) as f64 / 2.0;
        rank_sum_a += mid * all[k..e].iter().filter(|x| x.1).count() as f64;
        if e - k > 1 {
            ties.push(e - k);
        }
        k = e;
    }
    (rank_sum_a, ties)
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("Mann-Whitney samples must be nonempty"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InvalidField("non-finite value in Mann-Whitney sample".into()));
    }
    Ok(())
}

fn statistic(a: &[f64], b: &[f64]) -> (f64, f64, Vec<usize>) {
    let (ra, ties) = ranks(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let u = ra - na * (na + 1.0) / 2.0;
    (u, na * nb - u, ties)
}

/// Test with an exact p-value for small untied samples and the normal
/// approximation otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let (u, u_b, ties) = statistic(a, b);
    if a.len() + b.len() <= EXACT_MAX_TOTAL && ties.is_empty() {
        let p = exact_p(a.len(), b.len(), u.round() as usize);
        return Ok(MannWhitney { u, u_b, p, method: PMethod::Exact });
    }
    Ok(MannWhitney { u, u_b, p: normal_p(a.len(), b.len(), u, &ties), method: PMethod::Normal })
}

/// Same statistic with the normal approximation regardless of size.
pub fn mann_whitney_u_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let (u, u_b, ties) = statistic(a, b);
    Ok(MannWhitney { u, u_b, p: normal_p(a.len(), b.len(), u, &ties), method: PMethod::Normal })
}

/// Null distribution of U as counts over all C(na+nb, na) rank
/// assignments: `c[n][m][u] = c[n-1][m][u-m] + c[n][m-1][u]`.
pub fn u_distribution(na: usize, nb: usize) -> Vec<u64> {
    let umax = na * nb;
    // table[n][m] as flat vectors, built row by row in n
    let mut prev: Vec<Vec<u64>> = (0..=nb).map(|_| vec![1]).collect();
    for n in 1..=na {
        let mut cur: Vec<Vec<u64>> = Vec::with_capacity(nb + 1);
        cur.push(vec![1]);
        for m in 1..=nb {
            let mut c = vec![0u64; n * m + 1];
            // largest element belongs to the first sample: it beats all m
            for (u, &x) in prev[m].iter().enumerate() {
                c[u + m] += x;
            }
            for (u, &x) in cur[m - 1].iter().enumerate() {
                c[u] += x;
            }
            cur.push(c);
        }
        prev = cur;
    }
    let d = prev.swap_remove(nb);
    debug_assert_eq!(d.len(), umax + 1);
    d
}

/// Exact two-sided p-value: twice the smaller tail, capped at one.
pub fn exact_p(na: usize, nb: usize, u: usize) -> f64 {
    let d = u_distribution(na, nb);
    let total: u64 = d.iter().sum();
    let lower: u64 = d[..=u.min(d.len() - 1)].iter().sum();
    let upper: u64 = d[u.min(d.len() - 1)..].iter().sum();
    (2.0 * lower.min(upper) as f64 / total as f64).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn normal_p(na: usize, nb: usize, u: f64, ties: &[usize]) -> f64 {
    let (n1, n2) = (na as f64, nb as f64);
    let n = n1 + n2;
    let mu = n1 * n2 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0)).max(1.0);
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let std = Normal::standard();
    (2.0 * std.sf(z)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// U of the first sample for a set of ranks (1-based) held by it.
    fn u_of(ranks_a: &[usize]) -> usize {
        let na = ranks_a.len();
        ranks_a.iter().sum::<usize>() - na * (na + 1) / 2
    }

    /// Brute-force null distribution by enumerating rank subsets.
    fn brute(na: usize, nb: usize) -> Vec<u64> {
        let n = na + nb;
        let mut d = vec![0u64; na * nb + 1];
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != na {
                continue;
            }
            let r: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).collect();
            d[u_of(&r)] += 1;
        }
        d
    }

    #[test]
    fn recurrence_matches_enumeration() {
        for na in 1..=8 {
            for nb in 1..=(16 - na).min(8) {
                assert_eq!(u_distribution(na, nb), brute(na, nb), "({na},{nb})");
            }
        }
    }

    #[test]
    fn separated_triples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert_eq!(r.method, PMethod::Exact);
        assert!((r.p - 0.1).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_give_p_one() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.method, PMethod::Normal);
        assert_eq!(r.p, 1.0);
        let c = [5.0; 6];
        assert_eq!(mann_whitney_u(&c, &c).unwrap().p, 1.0);
    }

    #[test]
    fn u_statistics_sum_to_product() {
        let a = [1.5, 3.0, 3.0, 7.0, 9.0];
        let b = [3.0, 4.0, 0.5];
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.u + r.u_b, 15.0);
        // direct pair count, ties counting one half
        let direct: f64 = a
            .iter()
            .flat_map(|x| {
                b.iter().map(move |y| {
                    if x > y {
                        1.0
                    } else if x == y {
                        0.5
                    } else {
                        0.0
                    }
                })
            })
            .sum();
        assert_eq!(r.u, direct);
    }

    #[test]
    fn empty_sample() {
        assert!(matches!(mann_whitney_u(&[], &[1.0]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn normal_approximation_is_close_at_moderate_size() {
        // 8 vs 8: every U value agrees with the exact tail within 0.02
        for u in 0..=64 {
            let e = exact_p(8, 8, u);
            let n = normal_p(8, 8, u as f64, &[]);
            assert!((e - n).abs() < 0.02, "u={u}: exact {e} normal {n}");
        }
    }
}
