//! Closed-form bucket-and-ball evaluators and a Monte Carlo cross-check.
//!
//! Buckets model tag sets; balls model line installs. The module evaluates
//! the birth-death spill step, the exact binomial / Poisson expected count of
//! buckets at a given occupancy, birthday-bound access counts, and the
//! m-extra-ways transition requirement, plus a seeded simulator for all of
//! them.

use rand::Rng;

use crate::error::Error;
use crate::seed::seeded_rng;
use crate::Result;

/// Parameters of the bucket-and-ball abstraction.
///
/// `balls` is the number of throws, `buckets` the number of tag sets,
/// `base_state` the occupancy N a bucket starts the transition from, and
/// `extra` the m additional ways beyond N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketBallParams {
    pub balls: u64,
    pub buckets: u64,
    pub base_state: u64,
    pub extra: u64,
}

impl BucketBallParams {
    pub fn new(balls: u64, buckets: u64, base_state: u64, extra: u64) -> Result<Self> {
        if buckets == 0 {
            return Err(Error::argument("buckets must be positive"));
        }
        if extra == 0 {
            return Err(Error::argument(
                "extra ways must be >= 1; m = 0 is degenerate",
            ));
        }
        Ok(BucketBallParams {
            balls,
            buckets,
            base_state,
            extra,
        })
    }

    /// Occupancy rate: mean balls per bucket.
    pub fn lambda(&self) -> f64 {
        self.balls as f64 / self.buckets as f64
    }
}

/// One birth-death step: the probability that a bucket in state `N` moves to
/// `N + 1`, given `p_n = Pr(n = N)`. Clamped to [0, 1]; the raw expression can
/// exceed 1 for large ball counts.
pub fn spill_prob_birth_death(p_n: f64, params: &BucketBallParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_n) {
        return Err(Error::argument("p_n must be a probability"));
    }
    let step = params.balls as f64 / (params.buckets as f64 * (params.base_state + 1) as f64);
    Ok((step * p_n * p_n).clamp(0.0, 1.0))
}

/// Chain the birth-death step from `Pr(n = base_state) = 1` for `steps`
/// transitions; element k is the estimate for `Pr(n = base_state + k)`.
pub fn spill_prob_chain(params: &BucketBallParams, steps: u64) -> Vec<f64> {
    let mut probs = Vec::with_capacity(steps as usize + 1);
    let mut p = 1.0f64;
    probs.push(p);
    for k in 0..steps {
        let denom = params.buckets as f64 * (params.base_state + k + 1) as f64;
        p = (params.balls as f64 / denom * p * p).clamp(0.0, 1.0);
        probs.push(p);
    }
    probs
}

/// Evaluation route for [`any_bucket_expected_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpillMethod {
    BinomialExact,
    Poisson,
}

/// Expected number of buckets holding exactly `occupancy_target` balls after
/// all throws: `C(B, k) (1/buckets)^k (1 - 1/buckets)^(B-k) * buckets`, or its
/// Poisson limit. Log-space arithmetic keeps large ball counts exact.
pub fn any_bucket_expected_count(
    occupancy_target: u64,
    params: &BucketBallParams,
    method: SpillMethod,
) -> Result<f64> {
    if occupancy_target > params.balls {
        return Err(Error::argument(
            "occupancy_target cannot exceed the number of balls",
        ));
    }
    let k = occupancy_target;
    let buckets = params.buckets as f64;
    let ln = match method {
        SpillMethod::BinomialExact => {
            // ln C(B, k) with k small: sum of k logs.
            let mut ln_choose = 0.0f64;
            for j in 0..k {
                ln_choose += ((params.balls - j) as f64).ln() - ((j + 1) as f64).ln();
            }
            ln_choose - k as f64 * buckets.ln()
                + (params.balls - k) as f64 * (-1.0 / buckets).ln_1p()
        }
        SpillMethod::Poisson => {
            let lambda = params.lambda();
            let mut ln_fact = 0.0f64;
            for j in 1..=k {
                ln_fact += (j as f64).ln();
            }
            k as f64 * lambda.ln() - lambda - ln_fact
        }
    };
    Ok(ln.exp() * buckets)
}

/// Birthday-bound access counts for a `bits`-wide tuple space.
#[derive(Debug, Clone, Copy)]
pub struct BirthdayEstimate {
    /// `ceil(sqrt(2 * 2^bits * ln(1/(1-p))))`.
    pub exact: u64,
    /// The square-root rule of thumb `2^(bits/2)`.
    pub rule_of_thumb: u64,
}

/// Number of accesses until a tuple collision reaches `target_prob`.
pub fn birthday_accesses(index_bits_total: u32, target_prob: f64) -> Result<BirthdayEstimate> {
    if !(target_prob > 0.0 && target_prob < 1.0) {
        return Err(Error::argument("target_prob must be in (0, 1)"));
    }
    if index_bits_total == 0 || index_bits_total > 62 {
        return Err(Error::argument("index_bits_total must be in 1..=62"));
    }
    let space = (1u64 << index_bits_total) as f64;
    let exact = (2.0 * space * (1.0 / (1.0 - target_prob)).ln()).sqrt().ceil() as u64;
    let rule_of_thumb = (space.sqrt()).round() as u64;
    Ok(BirthdayEstimate {
        exact,
        rule_of_thumb,
    })
}

/// The corrected transition requirement: a set-associative eviction needs a
/// bucket to go from state N all the way to N + m, not merely N + 1.
#[derive(Debug, Clone)]
pub struct MWayRequirement {
    pub from_state: u64,
    pub to_state: u64,
    /// Width of the sibling-set tuple for a two-skew tag store.
    pub pairwise_bits: u32,
    /// Expected buckets at occupancy N + m under the exact binomial form.
    pub expected_buckets: f64,
    pub note: String,
}

/// Quantify the N -> N + m transition for `params`, assuming the buckets are
/// split across two skews of `buckets / 2` sets each.
pub fn m_way_requirement(params: &BucketBallParams) -> Result<MWayRequirement> {
    let to_state = params.base_state + params.extra;
    let expected_buckets =
        any_bucket_expected_count(to_state, params, SpillMethod::BinomialExact)?;
    let sets_per_skew = params.buckets / 2;
    if sets_per_skew == 0 || !sets_per_skew.is_power_of_two() {
        return Err(Error::argument(
            "pairwise bits need a power-of-two set count per skew",
        ));
    }
    let pairwise_bits = 2 * sets_per_skew.trailing_zeros();
    Ok(MWayRequirement {
        from_state: params.base_state,
        to_state,
        pairwise_bits,
        expected_buckets,
        note: format!(
            "eviction needs all {} extra ways of a sibling-set pair filled: a {}-deep \
             multi-collision on the {}-bit tuple, not a single collision",
            params.extra,
            2 * params.extra,
            pairwise_bits
        ),
    })
}

/// Outcome of one bucket-and-ball run.
#[derive(Debug, Clone)]
pub struct SpillStats {
    /// Throw index (1-based) at which a bucket first reached the threshold.
    pub throws_until_first_spill: Option<u64>,
    pub total_throws: u64,
    /// 1 when the run ended in a spill, else 0.
    pub spill_count: u64,
    /// Final bucket loads: `occupancy_histogram[c]` buckets hold `c` balls.
    pub occupancy_histogram: Vec<u64>,
}

/// Throw balls one at a time until a bucket reaches `spill_threshold` or
/// `max_throws` is exhausted. Each ball draws two independent uniform buckets;
/// with `load_balanced` it lands in the emptier one (uniform tie-break),
/// otherwise in the first.
pub fn bucket_ball_simulate(
    params: &BucketBallParams,
    load_balanced: bool,
    spill_threshold: u64,
    max_throws: u64,
    seed: u64,
) -> Result<SpillStats> {
    if spill_threshold == 0 {
        return Err(Error::argument("spill_threshold must be >= 1"));
    }
    if max_throws == 0 {
        return Err(Error::argument("max_throws must be positive"));
    }
    let mut rng = seeded_rng(seed);
    let n = params.buckets;
    let mut loads = vec![0u32; n as usize];
    let mut first_spill = None;
    for t in 1..=max_throws {
        let b1 = rng.random_range(0..n) as usize;
        let b2 = rng.random_range(0..n) as usize;
        let target = if !load_balanced {
            b1
        } else if loads[b1] < loads[b2] {
            b1
        } else if loads[b2] < loads[b1] {
            b2
        } else if rng.random::<bool>() {
            b1
        } else {
            b2
        };
        loads[target] += 1;
        if u64::from(loads[target]) >= spill_threshold {
            first_spill = Some(t);
            break;
        }
    }
    let total_throws = first_spill.unwrap_or(max_throws);
    let max_load = loads.iter().copied().max().unwrap_or(0) as usize;
    let mut occupancy_histogram = vec![0u64; max_load + 1];
    for &l in &loads {
        occupancy_histogram[l as usize] += 1;
    }
    Ok(SpillStats {
        throws_until_first_spill: first_spill,
        total_throws,
        spill_count: u64::from(first_spill.is_some()),
        occupancy_histogram,
    })
}

/// Median throw count of the first collision among `bits`-bit uniform draws,
/// over `trials` seeded runs. Cross-checks [`birthday_accesses`].
pub fn first_collision_median(bits: u32, trials: u64, seed: u64) -> Result<u64> {
    let params = BucketBallParams::new(u64::MAX, 1u64 << bits, 1, 1)?;
    let mut firsts = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let stats = bucket_ball_simulate(
            &params,
            false,
            2,
            u64::MAX,
            crate::seed::derive_seed(seed, 0xb17d, t),
        )?;
        firsts.push(stats.throws_until_first_spill.expect("unbounded run spills"));
    }
    firsts.sort_unstable();
    Ok(firsts[firsts.len() / 2])
}
