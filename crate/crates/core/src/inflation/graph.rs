use serde::{Deserialize, Serialize};

use super::InflationError;

/// The causal scenario under test: N parties with fixed input cardinalities,
/// one (N−1)-ary nonclassical source per (N−1)-subset of parties (indexed by
/// the excluded party), plus implicit global shared randomness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    inputs: Vec<usize>,
}

impl Scenario {
    pub fn new(inputs: Vec<usize>) -> Result<Self, InflationError> {
        if inputs.len() < 2 {
            return Err(InflationError::ScenarioMismatch(
                "a scenario needs at least two parties".into(),
            ));
        }
        if inputs.iter().any(|&m| m == 0) {
            return Err(InflationError::ScenarioMismatch(
                "every party needs at least one input".into(),
            ));
        }
        Ok(Self { inputs })
    }

    pub fn n_parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn source_arity(&self) -> usize {
        self.n_parties() - 1
    }

    /// Source roles are indexed by the excluded party.
    pub fn n_source_roles(&self) -> usize {
        self.n_parties()
    }

    pub fn source_scope(&self, role: usize) -> Vec<usize> {
        (0..self.n_parties()).filter(|&p| p != role).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyCopy {
    pub role: usize,
    pub copy: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCopy {
    pub role: usize,
    pub copy: usize,
    pub scope: Vec<usize>,
}

/// A nonfanout inflation: copies of party and source roles rewired so that no
/// source copy feeds two copies of the same party, and every party copy
/// receives exactly one copy of each incident source role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationGraph {
    pub party_copies: Vec<PartyCopy>,
    pub source_copies: Vec<SourceCopy>,
    /// `(source_copy index, party_copy index)` pairs.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct NonfanoutReport {
    pub valid: bool,
    pub diagnostics: Vec<String>,
}

impl InflationGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, InflationError> {
        serde_json::from_str(s)
            .map_err(|e| InflationError::ScenarioMismatch(format!("graph JSON: {e}")))
    }

    pub fn party_copy_index(&self, role: usize, copy: usize) -> Option<usize> {
        self.party_copies
            .iter()
            .position(|pc| pc.role == role && pc.copy == copy)
    }

    /// Party copies fed by a source copy.
    pub fn targets_of(&self, source_idx: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(s, _)| s == source_idx)
            .map(|&(_, p)| p)
            .collect()
    }

    /// Source copies feeding a party copy.
    pub fn sources_of(&self, party_idx: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, p)| p == party_idx)
            .map(|&(s, _)| s)
            .collect()
    }
}

/// Structural check of both nonfanout clauses, with diagnostics naming the
/// offending copy. The empty graph is vacuously valid.
pub fn validate_nonfanout(g: &InflationGraph) -> NonfanoutReport {
    let mut diagnostics = Vec::new();

    for &(s, p) in &g.edges {
        if s >= g.source_copies.len() || p >= g.party_copies.len() {
            diagnostics.push(format!("edge ({s}, {p}) references a missing copy"));
        }
    }
    if !diagnostics.is_empty() {
        return NonfanoutReport { valid: false, diagnostics };
    }

    // Clause 1: a source copy feeds at most one copy of each party role in its
    // scope, and nothing outside its scope.
    for (si, sc) in g.source_copies.iter().enumerate() {
        let mut roles_seen = Vec::new();
        for t in g.targets_of(si) {
            let role = g.party_copies[t].role;
            if !sc.scope.contains(&role) {
                diagnostics.push(format!(
                    "source copy ({}, {}) feeds party role {role} outside its scope",
                    sc.role, sc.copy
                ));
            }
            if roles_seen.contains(&role) {
                diagnostics.push(format!(
                    "source copy ({}, {}) feeds two copies of party role {role}",
                    sc.role, sc.copy
                ));
            }
            roles_seen.push(role);
        }
    }

    // Clause 2: each party copy receives exactly one copy of each source role
    // incident to its role.
    for (pi, pc) in g.party_copies.iter().enumerate() {
        let incident: Vec<usize> = g
            .source_copies
            .iter()
            .map(|sc| sc.role)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .filter(|&r| {
                g.source_copies
                    .iter()
                    .any(|sc| sc.role == r && sc.scope.contains(&pc.role))
            })
            .collect();
        for r in incident {
            let got = g
                .sources_of(pi)
                .into_iter()
                .filter(|&s| g.source_copies[s].role == r)
                .count();
            if got != 1 {
                diagnostics.push(format!(
                    "party copy ({}, {}) receives {got} copies of source role {r}, expected 1",
                    pc.role, pc.copy
                ));
            }
        }
    }

    NonfanoutReport { valid: diagnostics.is_empty(), diagnostics }
}

/// The trivial single-copy inflation: the scenario itself as a graph.
pub fn scenario_graph(s: &Scenario) -> InflationGraph {
    ring_like(s, 1, false)
}

/// The `order`-copy ring inflation. Copy 0 of every role is wired exactly as
/// the original scenario (the canonical injectable set); copies `1..order`
/// are wired cyclically among themselves with one source role twisted, which
/// closes them into a single ring for `order ≥ 3`.
pub fn ring_inflation(s: &Scenario, order: usize) -> Result<InflationGraph, InflationError> {
    if order < 2 {
        return Err(InflationError::InvalidOrder(order));
    }
    Ok(ring_like(s, order, false))
}

/// A fully twisted `order`-copy ring with no intact scenario copy (for
/// `order = 2` and three parties this is the hexagon). It has no full-size
/// injectable set, so it is useful only inside multi-graph systems where
/// another graph carries the canonical set.
pub fn twisted_ring_inflation(s: &Scenario, order: usize) -> Result<InflationGraph, InflationError> {
    if order < 2 {
        return Err(InflationError::InvalidOrder(order));
    }
    Ok(ring_like(s, order, true))
}

fn ring_like(s: &Scenario, order: usize, full_twist: bool) -> InflationGraph {
    let n = s.n_parties();
    let mut party_copies = Vec::new();
    for role in 0..n {
        for copy in 0..order {
            party_copies.push(PartyCopy { role, copy });
        }
    }
    let mut source_copies = Vec::new();
    for role in 0..s.n_source_roles() {
        for copy in 0..order {
            source_copies.push(SourceCopy { role, copy, scope: s.source_scope(role) });
        }
    }
    let party_index = |role: usize, copy: usize| role * order + copy;
    let mut edges = Vec::new();
    for (si, sc) in source_copies.iter().enumerate() {
        for (pos, &p) in sc.scope.iter().enumerate() {
            // Twist the last scope slot of source role 0 by one copy.
            let twist = usize::from(sc.role == 0 && pos + 1 == sc.scope.len());
            let target_copy = if full_twist {
                (sc.copy + twist) % order
            } else if sc.copy == 0 || order == 1 {
                sc.copy
            } else {
                1 + (sc.copy - 1 + twist) % (order - 1)
            };
            edges.push((si, party_index(p, target_copy)));
        }
    }
    InflationGraph { party_copies, source_copies, edges }
}

/// All copy-relabeling automorphisms: per-role permutations of party copies
/// whose induced action on source copies preserves the wiring. Returned as
/// permutations of `party_copies` indices; the identity is always present.
pub fn automorphisms(g: &InflationGraph) -> Result<Vec<Vec<usize>>, InflationError> {
    let n_pc = g.party_copies.len();
    let mut roles: Vec<usize> = g.party_copies.iter().map(|pc| pc.role).collect();
    roles.sort_unstable();
    roles.dedup();

    // Copies per role, as party_copies indices.
    let per_role: Vec<Vec<usize>> = roles
        .iter()
        .map(|&r| {
            (0..n_pc)
                .filter(|&i| g.party_copies[i].role == r)
                .collect()
        })
        .collect();

    // Precompute each source copy's target set for matching.
    let targets: Vec<Vec<usize>> = (0..g.source_copies.len())
        .map(|si| {
            let mut t = g.targets_of(si);
            t.sort_unstable();
            t
        })
        .collect();

    let mut result = Vec::new();
    let mut perm = vec![usize::MAX; n_pc];
    let mut budget = 1_000_000usize;
    search(
        g,
        &per_role,
        &targets,
        0,
        &mut perm,
        &mut result,
        &mut budget,
    )?;
    if result.is_empty() {
        return Err(InflationError::ScenarioMismatch(
            "automorphism search lost the identity".into(),
        ));
    }
    Ok(result)
}

fn search(
    g: &InflationGraph,
    per_role: &[Vec<usize>],
    targets: &[Vec<usize>],
    depth: usize,
    perm: &mut Vec<usize>,
    result: &mut Vec<Vec<usize>>,
    budget: &mut usize,
) -> Result<(), InflationError> {
    if *budget == 0 {
        return Err(InflationError::AutomorphismOverflow);
    }
    *budget -= 1;

    if depth == per_role.len() {
        if induced_source_map_is_bijection(g, targets, perm) {
            result.push(perm.clone());
            if result.len() > 4096 {
                return Err(InflationError::AutomorphismOverflow);
            }
        }
        return Ok(());
    }

    let slots = &per_role[depth];
    let mut assignment: Vec<usize> = (0..slots.len()).collect();
    loop {
        for (i, &slot) in slots.iter().enumerate() {
            perm[slot] = slots[assignment[i]];
        }
        // Prune: source copies fully inside assigned roles must map somewhere.
        if partial_consistent(g, targets, perm) {
            search(g, per_role, targets, depth + 1, perm, result, budget)?;
        }
        for &slot in slots {
            perm[slot] = usize::MAX;
        }
        if !next_permutation(&mut assignment) {
            break;
        }
    }
    Ok(())
}

fn partial_consistent(g: &InflationGraph, targets: &[Vec<usize>], perm: &[usize]) -> bool {
    'outer: for (si, t) in targets.iter().enumerate() {
        let mut image = Vec::with_capacity(t.len());
        for &p in t {
            if perm[p] == usize::MAX {
                continue 'outer;
            }
            image.push(perm[p]);
        }
        image.sort_unstable();
        let role = g.source_copies[si].role;
        let found = targets
            .iter()
            .enumerate()
            .any(|(sj, tj)| g.source_copies[sj].role == role && *tj == image);
        if !found {
            return false;
        }
    }
    true
}

/// With every party copy mapped, the induced action on source copies must be
/// a role-preserving bijection: per role, the multiset of imaged target sets
/// must equal the multiset of original target sets.
fn induced_source_map_is_bijection(
    g: &InflationGraph,
    targets: &[Vec<usize>],
    perm: &[usize],
) -> bool {
    let mut roles: Vec<usize> = g.source_copies.iter().map(|sc| sc.role).collect();
    roles.sort_unstable();
    roles.dedup();
    for role in roles {
        let indices: Vec<usize> = (0..g.source_copies.len())
            .filter(|&si| g.source_copies[si].role == role)
            .collect();
        let mut originals: Vec<Vec<usize>> = indices.iter().map(|&si| targets[si].clone()).collect();
        let mut images: Vec<Vec<usize>> = indices
            .iter()
            .map(|&si| {
                let mut img: Vec<usize> = targets[si].iter().map(|&p| perm[p]).collect();
                img.sort_unstable();
                img
            })
            .collect();
        originals.sort();
        images.sort();
        if originals != images {
            return false;
        }
    }
    true
}

fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// A set of party copies, one per role in `roles`, whose induced wiring
/// matches the original scenario restricted to those roles: its marginal in
/// any inflation distribution must reproduce the observed marginal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectableSet {
    /// Ascending roles.
    pub roles: Vec<usize>,
    /// `party_copies` indices aligned with `roles`.
    pub copies: Vec<usize>,
}

/// Enumerates every injectable set of every size: for each choice of one copy
/// per role subset, every source role shared by two or more chosen roles must
/// have a single copy wired to all of them.
pub fn injectable_sets(g: &InflationGraph, s: &Scenario) -> Vec<InjectableSet> {
    let n = s.n_parties();
    let mut per_role: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, pc) in g.party_copies.iter().enumerate() {
        if pc.role < n {
            per_role[pc.role].push(i);
        }
    }

    let mut out = Vec::new();
    for roles_mask in 1usize..(1 << n) {
        let roles: Vec<usize> = (0..n).filter(|&p| roles_mask >> p & 1 == 1).collect();
        if roles.iter().any(|&p| per_role[p].is_empty()) {
            continue;
        }
        // Source roles with at least two scope members inside `roles`.
        let binding_sources: Vec<usize> = (0..s.n_source_roles())
            .filter(|&sr| {
                s.source_scope(sr)
                    .iter()
                    .filter(|p| roles.contains(p))
                    .count()
                    >= 2
            })
            .collect();

        let mut choice = vec![0usize; roles.len()];
        loop {
            let copies: Vec<usize> = roles
                .iter()
                .zip(&choice)
                .map(|(&r, &c)| per_role[r][c])
                .collect();
            let ok = binding_sources.iter().all(|&sr| {
                let members: Vec<usize> = roles
                    .iter()
                    .zip(&copies)
                    .filter(|(r, _)| s.source_scope(sr).contains(r))
                    .map(|(_, &c)| c)
                    .collect();
                g.source_copies.iter().enumerate().any(|(si, sc)| {
                    sc.role == sr && {
                        let t = g.targets_of(si);
                        members.iter().all(|m| t.contains(m))
                    }
                })
            });
            if ok {
                out.push(InjectableSet { roles: roles.clone(), copies });
            }
            // Advance the mixed-radix choice.
            let mut k = roles.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < per_role[roles[k]].len() {
                    break;
                }
                choice[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
    }
    out
}

/// The lexicographically first full-size injectable set, if any.
pub fn canonical_injectable_set(
    g: &InflationGraph,
    s: &Scenario,
) -> Option<InjectableSet> {
    let n = s.n_parties();
    injectable_sets(g, s)
        .into_iter()
        .filter(|t| t.roles.len() == n)
        .min_by(|a, b| a.copies.cmp(&b.copies))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Scenario {
        Scenario::new(vec![2, 2, 2]).unwrap()
    }

    #[test]
    fn ring_rejects_order_one() {
        assert!(matches!(
            ring_inflation(&triangle(), 1),
            Err(InflationError::InvalidOrder(1))
        ));
    }

    #[test]
    fn order2_ring_counts_and_validity() {
        let g = ring_inflation(&triangle(), 2).unwrap();
        assert_eq!(g.party_copies.len(), 6);
        assert_eq!(g.source_copies.len(), 6);
        let report = validate_nonfanout(&g);
        assert!(report.valid, "{:?}", report.diagnostics);
    }

    #[test]
    fn order2_ring_n4_counts_and_validity() {
        let s = Scenario::new(vec![2, 2, 2, 2]).unwrap();
        let g = ring_inflation(&s, 2).unwrap();
        assert_eq!(g.party_copies.len(), 8);
        assert_eq!(g.source_copies.len(), 8);
        assert!(validate_nonfanout(&g).valid);
    }

    #[test]
    fn order3_ring_valid_and_has_canonical_set()  {
        let g = ring_inflation(&triangle(), 3).unwrap();
        assert!(validate_nonfanout(&g).valid);
        let canon = canonical_injectable_set(&g, &triangle()).unwrap();
        assert_eq!(canon.roles, vec![0, 1, 2]);
        // All canonical members are copy 0.
        for &c in &canon.copies {
            assert_eq!(g.party_copies[c].copy, 0);
        }
    }

    #[test]
    fn twisted_order2_has_no_full_injectable_set() {
        let g = twisted_ring_inflation(&triangle(), 2).unwrap();
        assert!(validate_nonfanout(&g).valid);
        assert!(canonical_injectable_set(&g, &triangle()).is_none());
        // But every adjacent pair is injectable.
        let pairs = injectable_sets(&g, &triangle())
            .into_iter()
            .filter(|t| t.roles.len() == 2)
            .count();
        assert_eq!(pairs, 6);
    }

    #[test]
    fn fanout_violation_is_named() {
        let s = triangle();
        let mut g = scenario_graph(&s);
        // Wire source copy 0 to a second copy of party role 1 — first, devise
        // a second copy of that party.
        g.party_copies.push(PartyCopy { role: 1, copy: 1 });
        let extra_party = g.party_copies.len() - 1;
        g.edges.push((0, extra_party));
        let report = validate_nonfanout(&g);
        assert!(!report.valid);
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.contains("two copies of party role 1")));
    }

    #[test]
    fn empty_graph_is_vacuously_valid() {
        let g = InflationGraph { party_copies: vec![], source_copies: vec![], edges: vec![] };
        assert!(validate_nonfanout(&g).valid);
    }

    #[test]
    fn order2_ring_automorphisms_are_identity_and_swap() {
        let g = ring_inflation(&triangle(), 2).unwrap();
        let auts = automorphisms(&g).unwrap();
        assert_eq!(auts.len(), 2);
        assert!(auts.iter().any(|p| p.iter().enumerate().all(|(i, &j)| i == j)));
    }

    #[test]
    fn hexagon_automorphisms_contain_copy_rotation() {
        let g = twisted_ring_inflation(&triangle(), 2).unwrap();
        let auts = automorphisms(&g).unwrap();
        assert_eq!(auts.len(), 2);
    }

    #[test]
    fn scenario_graph_is_fully_injectable() {
        let s = triangle();
        let g = scenario_graph(&s);
        assert!(validate_nonfanout(&g).valid);
        let canon = canonical_injectable_set(&g, &s).unwrap();
        assert_eq!(canon.copies.len(), 3);
    }

    #[test]
    fn graph_json_roundtrip() {
        let g = ring_inflation(&triangle(), 2).unwrap();
        let back = InflationGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }
}
