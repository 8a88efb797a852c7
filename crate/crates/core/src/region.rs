//! Credible regions: highest posterior density, relative surprise, and lowest
//! posterior loss, plus the tail probability and the checks that relate them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::check_decreasing;
use crate::loss::{posterior_risks, LossSpec};
use crate::model::BeliefTables;
use crate::numeric::{self, ranked_groups, Order, TIE_RTOL};

/// Tolerance when comparing accumulated posterior mass against gamma.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionFamily {
    Hpd,
    Rs,
    Lpl,
}

impl std::fmt::Display for RegionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegionFamily::Hpd => "hpd",
            RegionFamily::Rs => "rs",
            RegionFamily::Lpl => "lpl",
        })
    }
}

/// A gamma-credible region over the psi support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CredibleRegion {
    pub family: RegionFamily,
    pub gamma: f64,
    /// Sorted psi indices.
    pub members: Vec<usize>,
    /// Cutoff on the ranking key: posterior probability, relative belief ratio, or posterior risk.
    pub threshold: f64,
    pub attained_mass: f64,
    pub support_size: usize,
}

impl CredibleRegion {
    pub fn contains(&self, psi: usize) -> bool {
        self.members.binary_search(&psi).is_ok()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::param("gamma", format!("{gamma} is outside [0, 1]")))
    }
}

/// Level set of `keys` (whole tie groups, in rank order) reaching posterior mass gamma.
fn level_region(family: RegionFamily, keys: &[f64], order: Order, tables: &BeliefTables, gamma: f64) -> Result<CredibleRegion> {
    check_gamma(gamma)?;
    let groups = ranked_groups(keys, order);
    let mut members = Vec::new();
    let mut cum = numeric::KahanSum::new();
    let mut threshold = keys[groups[0][0]];
    // full credibility keeps every group carrying posterior mass
    let last_charged = groups
        .iter()
        .rposition(|g| g.iter().any(|&j| tables.marg_post()[j] > 0.0))
        .unwrap_or(0);
    for (k, g) in groups.iter().enumerate() {
        members.extend_from_slice(g);
        for &j in g {
            cum.add(tables.marg_post()[j]);
        }
        threshold = keys[g[0]];
        if cum.value() >= gamma - MASS_TOL && (gamma < 1.0 || k >= last_charged) {
            break;
        }
    }
    members.sort_unstable();
    Ok(CredibleRegion {
        family,
        gamma,
        attained_mass: tables.post_mass(&members),
        members,
        threshold,
        support_size: tables.len(),
    })
}

pub fn hpd_region(tables: &BeliefTables, gamma: f64) -> Result<CredibleRegion> {
    level_region(RegionFamily::Hpd, tables.marg_post(), Order::Descending, tables, gamma)
}

pub fn rs_region(tables: &BeliefTables, gamma: f64) -> Result<CredibleRegion> {
    level_region(RegionFamily::Rs, tables.rb(), Order::Descending, tables, gamma)
}

pub fn lpl_region(loss: &LossSpec, tables: &BeliefTables, gamma: f64) -> Result<CredibleRegion> {
    let risks = posterior_risks(loss, tables)?;
    level_region(RegionFamily::Lpl, &risks, Order::Ascending, tables, gamma)
}

/// Posterior mass of `{psi : rb(psi) <= rb(psi0)}`, ties included.
pub fn tail_probability(tables: &BeliefTables, psi0: usize) -> Result<f64> {
    tables.check_index(psi0)?;
    let rb = tables.rb();
    let scale = rb.iter().fold(0.0_f64, |m, v| m.max(*v));
    let cut = rb[psi0] + TIE_RTOL * scale;
    Ok(numeric::sum(rb.iter().zip(tables.marg_post()).filter(|(r, _)| **r <= cut).map(|(_, q)| *q)).min(1.0))
}

/// Credibility levels at which relative surprise regions have exact content.
pub fn attainable_gammas(tables: &BeliefTables) -> Vec<f64> {
    let mut cum = numeric::KahanSum::new();
    ranked_groups(tables.rb(), Order::Descending)
        .iter()
        .map(|g| {
            for &j in g {
                cum.add(tables.marg_post()[j]);
            }
            cum.value().min(1.0)
        })
        .collect()
}

/// Posterior mass of the symmetric difference of two regions.
pub fn region_distance(a: &CredibleRegion, b: &CredibleRegion, tables: &BeliefTables) -> Result<f64> {
    if a.support_size != b.support_size || a.support_size != tables.len() {
        return Err(Error::TablesMismatch {
            left: a.support_size,
            right: b.support_size,
            tables: tables.len(),
        });
    }
    let mut in_a = vec![false; tables.len()];
    for &j in &a.members {
        in_a[j] = true;
    }
    let mut in_b = vec![false; tables.len()];
    for &j in &b.members {
        in_b[j] = true;
    }
    Ok(numeric::sum(
        (0..tables.len()).filter(|&j| in_a[j] != in_b[j]).map(|j| tables.marg_post()[j]),
    ))
}

/// Brute-force check that an exactly attained relative surprise region has the
/// smallest prior content among all regions with posterior content at least gamma,
/// and the largest posterior content among sets of equal prior content.
pub fn minimal_prior_size_check(tables: &BeliefTables, gamma: f64) -> Result<bool> {
    let n = tables.len();
    if n > 20 {
        return Err(Error::TooLargeForBruteForce(n));
    }
    let region = rs_region(tables, gamma)?;
    if (region.attained_mass - gamma).abs() > MASS_TOL {
        return Err(Error::InexactAttainment {
            gamma,
            attained: region.attained_mass,
        });
    }
    let c_prior = tables.prior_mass(&region.members);
    let c_post = region.attained_mass;

    let size = 1usize << n;
    let mut post = vec![0.0; size];
    let mut prior = vec![0.0; size];
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        post[mask] = post[rest] + tables.marg_post()[low];
        prior[mask] = prior[rest] + tables.marg_prior()[low];
    }
    let tol = 1e-12;
    for mask in 0..size {
        if post[mask] >= gamma - tol && prior[mask] < c_prior - tol {
            return Ok(false);
        }
        if (prior[mask] - c_prior).abs() <= tol && post[mask] > c_post + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lowest posterior loss regions along a decreasing cap schedule, compared with
/// the relative surprise region at the same gamma.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaSweepReport {
    pub gamma: f64,
    /// Whether the relative surprise region has content exactly gamma.
    pub exact_attainment: bool,
    pub rs_region: CredibleRegion,
    pub steps: Vec<(f64, CredibleRegion)>,
    /// Intersection of the members over the tail half of the schedule.
    pub lim_inf: Vec<usize>,
    /// Union of the members over the tail half of the schedule.
    pub lim_sup: Vec<usize>,
    /// Next credibility level above gamma with exact content, and its region.
    pub next_region: Option<CredibleRegion>,
    pub rs_within_lim_inf: bool,
    pub lim_sup_within_next: bool,
    /// The last region in the schedule equals the relative surprise region.
    pub converged: bool,
}

pub fn eta_sweep(tables: &BeliefTables, gamma: f64, etas: &[f64]) -> Result<EtaSweepReport> {
    check_decreasing(etas, "eta")?;
    let rs = rs_region(tables, gamma)?;
    let exact_attainment = (rs.attained_mass - gamma).abs() <= MASS_TOL;
    let steps = etas
        .iter()
        .map(|&eta| Ok((eta, lpl_region(&LossSpec::CappedPriorBased { eta }, tables, gamma)?)))
        .collect::<Result<Vec<_>>>()?;

    let tail = &steps[steps.len() / 2..];
    let n = tables.len();
    let lim_inf: Vec<usize> = (0..n).filter(|&j| tail.iter().all(|(_, r)| r.contains(j))).collect();
    let lim_sup: Vec<usize> = (0..n).filter(|&j| tail.iter().any(|(_, r)| r.contains(j))).collect();

    let next_region = attainable_gammas(tables)
        .into_iter()
        .find(|g| *g > gamma + MASS_TOL)
        .map(|g| rs_region(tables, g))
        .transpose()?;

    let rs_within_lim_inf = rs.members.iter().all(|j| lim_inf.contains(j));
    let lim_sup_within_next = match &next_region {
        Some(r) => lim_sup.iter().all(|&j| r.contains(j)),
        None => true,
    };
    let converged = steps.last().map(|(_, r)| r.members == rs.members).unwrap_or(false);

    Ok(EtaSweepReport {
        gamma,
        exact_attainment,
        rs_region: rs,
        steps,
        lim_inf,
        lim_sup,
        next_region,
        rs_within_lim_inf,
        lim_sup_within_next,
        converged,
    })
}
