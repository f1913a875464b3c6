//! Quick verdicts: good situations (the algorithm wins) and the large-item
//! and five/nine heuristics (the adversary wins, with a witness).
//!
//! All functions take canonical (non-increasing) load vectors.

use binstretch_core::GameParams;

fn alpha(params: &GameParams) -> i64 {
    params.alpha()
}

/// The m-1 fullest bins already hold enough that whatever remains fits
/// into the last bin.
pub fn gs1(loads: &[u32], params: &GameParams) -> bool {
    let m = loads.len() as i64;
    let g = i64::from(params.g());
    let head: i64 = loads[..loads.len() - 1].iter().map(|&l| i64::from(l)).sum();
    head >= (m - 1) * g - alpha(params)
}

/// Two bins A, B such that the others hold at least `(m-2)g - 2α - 1` and
/// one of the others, C, has load below α. Defined for `m >= 4`.
pub fn gs2(loads: &[u32], params: &GameParams) -> bool {
    let m = loads.len();
    if m < 4 {
        return false;
    }
    let g = i64::from(params.g());
    let a = alpha(params);
    let total: i64 = loads.iter().map(|&l| i64::from(l)).sum();
    let need = (m as i64 - 2) * g - 2 * a - 1;
    for i in 0..m {
        for j in i + 1..m {
            let rest = total - i64::from(loads[i]) - i64::from(loads[j]);
            if rest < need {
                continue;
            }
            if (0..m).any(|c| c != i && c != j && i64::from(loads[c]) < a) {
                return true;
            }
        }
    }
    false
}

/// Quantities of the third good situation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gs3Quantities {
    /// Load of all bins but the last two.
    pub s: i64,
    /// Smallest load of the last bin that reaches the first good situation.
    pub r: i64,
    /// `t - r`.
    pub o: i64,
}

pub fn gs3_quantities(loads: &[u32], params: &GameParams) -> Gs3Quantities {
    let m = loads.len();
    let g = i64::from(params.g());
    let s: i64 = loads[..m.saturating_sub(2)].iter().map(|&l| i64::from(l)).sum();
    let r = (m as i64 - 1) * g - alpha(params) - s;
    Gs3Quantities {
        s,
        r,
        o: i64::from(params.t()) - r,
    }
}

/// One of the last two bins has load in `((m-1)g - α - o - s, α]` while the
/// last-bin requirement `r` is at most `t - 1`. Defined for `m >= 4`.
pub fn gs3(loads: &[u32], params: &GameParams) -> bool {
    let m = loads.len();
    if m < 4 {
        return false;
    }
    let q = gs3_quantities(loads, params);
    if q.r > i64::from(params.t()) - 1 {
        return false;
    }
    let g = i64::from(params.g());
    let a = alpha(params);
    let low = (m as i64 - 1) * g - a - q.o - q.s;
    [loads[m - 2], loads[m - 1]]
        .iter()
        .map(|&l| i64::from(l))
        .any(|l| l > low && l <= a)
}

/// Any good situation applies.
pub fn good_situation(loads: &[u32], params: &GameParams) -> bool {
    gs1(loads, params) || gs2(loads, params) || gs3(loads, params)
}

/// How the adversary wins from a configuration without search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryWitness {
    /// Send `copies` items of `size`; every placement sequence overflows.
    LargeItem { size: u32, copies: u32 },
    /// Send fives while the algorithm keeps placing them onto bins below 5,
    /// then finish with 14s or with m nines.
    FiveNine,
}

/// Candidate `(size, copies)` of the large-item heuristic for 0-based bin
/// `k`, or `None` when bin `k` is below `t - g` or the item exceeds `g`.
pub fn large_item_candidate(loads: &[u32], params: &GameParams, k: usize, floor: u32) -> Option<(u32, u32)> {
    let t = params.t();
    let g = params.g();
    let m = loads.len();
    let l = loads[k];
    if i64::from(l) < i64::from(t) - i64::from(g) {
        return None;
    }
    let mut size = t.saturating_sub(l).max(1);
    if k + 1 < m {
        // Two copies must not fit together onto any later bin; the emptiest binds.
        let last = loads[m - 1];
        size = size.max((t - last).div_ceil(2));
    }
    size = size.max(floor);
    if size > g {
        return None;
    }
    Some((size, (m - k) as u32))
}

/// Try every bin's candidate; `feasible(size, copies)` decides whether the
/// copies can join the current items.
pub fn large_item_heuristic(
    loads: &[u32],
    params: &GameParams,
    floor: u32,
    mut feasible: impl FnMut(u32, u32) -> bool,
) -> Option<AdversaryWitness> {
    let volume: u32 = loads.iter().sum();
    let mut tried: Vec<(u32, u32)> = Vec::new();
    for k in 0..loads.len() {
        let Some((size, copies)) = large_item_candidate(loads, params, k, floor) else {
            continue;
        };
        if volume + size * copies > params.capacity() || tried.contains(&(size, copies)) {
            continue;
        }
        tried.push((size, copies));
        if feasible(size, copies) {
            return Some(AdversaryWitness::LargeItem { size, copies });
        }
    }
    None
}

/// Next move of the five/nine recipe from a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiveNineMove {
    /// Send m items of size 9.
    Nines,
    /// Send this many items of size 14.
    Fourteens(u32),
    /// Send an item of size 5.
    Five,
}

/// Whether the five/nine heuristic may start here: parameters 19/14, all
/// bins non-empty and one bin at 5 or more.
pub fn five_nine_gate(loads: &[u32], params: &GameParams) -> bool {
    params.t() == 19
        && params.g() == 14
        && loads.iter().all(|&l| l >= 1)
        && loads[0] >= 5
}

/// Decide the recipe's move at `loads`; `feasible(&[(size, copies)])` tests
/// the current items plus the listed extras. `None` means the recipe fails.
pub fn five_nine_step(
    loads: &[u32],
    floor: u32,
    feasible: &mut impl FnMut(&[(u32, u32)]) -> bool,
) -> Option<FiveNineMove> {
    let m = loads.len() as u32;
    if loads[0] >= 10 {
        return (floor <= 9 && feasible(&[(9, m)])).then_some(FiveNineMove::Nines);
    }
    let p = loads.iter().filter(|&&l| l < 5).count() as u32;
    if feasible(&[(14, p + 1)]) {
        return Some(FiveNineMove::Fourteens(p + 1));
    }
    if floor <= 5 && feasible(&[(5, 1), (9, m)]) {
        return Some(FiveNineMove::Five);
    }
    None
}

/// Simulate the recipe along the branch where every 5 lands on a bin below
/// 5 (the other branches end in nines at once).
pub fn five_nine_heuristic(
    loads: &[u32],
    params: &GameParams,
    floor: u32,
    mut feasible: impl FnMut(&[(u32, u32)]) -> bool,
) -> Option<AdversaryWitness> {
    if !five_nine_gate(loads, params) {
        return None;
    }
    let m = loads.len() as u32;
    if !feasible(&[(9, m)]) {
        return None;
    }
    if loads[0] >= 10 {
        return (floor <= 9).then_some(AdversaryWitness::FiveNine);
    }
    let mut p = loads.iter().filter(|&&l| l < 5).count() as u32;
    let mut fives = 0u32;
    loop {
        if feasible(&[(5, fives), (14, p + 1)]) {
            return Some(AdversaryWitness::FiveNine);
        }
        if fives == 0 && floor > 5 {
            return None;
        }
        if !feasible(&[(5, fives + 1), (9, m)]) {
            return None;
        }
        if p == 0 {
            // Every placement of this five lands on a bin of load at least 5.
            return Some(AdversaryWitness::FiveNine);
        }
        p -= 1;
        fives += 1;
    }
}
