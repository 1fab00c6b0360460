use super::graph::{
    automorphisms, canonical_injectable_set, injectable_sets, validate_nonfanout, InflationGraph,
    InjectableSet, Scenario,
};
use super::InflationError;
use crate::polytope::{nonsignalling_rows, Constraint, LinearProgram, Relation, Sense};
use crate::qsim::Behavior;

/// Sparse row over inflation-event columns (or reduced coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow(pub Vec<(usize, f64)>);

impl SparseRow {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&(j, v)| v * x[j]).sum()
    }

    pub fn to_dense(&self, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width];
        for &(j, v) in &self.0 {
            out[j] += v;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum M2Kind {
    Nonsignalling,
    Automorphism,
    InjectableMarginal,
}

/// One inflation graph's share of the joint variable vector.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub graph: InflationGraph,
    pub col_offset: usize,
    pub n_copies: usize,
    /// Input cardinality per party copy.
    pub inputs: Vec<usize>,
    pub n_events: usize,
    pub n_cols: usize,
    pub group: Vec<Vec<usize>>,
    pub orbit_of_col: Vec<u32>,
    pub orbit_reps: Vec<usize>,
    /// Offset of each copy-subset's coordinate range.
    pub coord_offset: Vec<usize>,
    pub coord_global_offset: usize,
    /// Wiring component id per party copy, when every component holds at most
    /// one copy of each role (then products of the observed behavior over
    /// components are feasible inflation distributions).
    pub product_components: Option<Vec<usize>>,
}

impl Block {
    #[inline]
    pub fn col(&self, s_idx: usize, a_idx: usize) -> usize {
        s_idx * self.n_events + a_idx
    }

    pub fn decode_col(&self, v: usize) -> (usize, usize) {
        (v / self.n_events, v % self.n_events)
    }

    pub fn setting_index(&self, setting: &[usize]) -> usize {
        let mut idx = 0;
        for (j, &x) in setting.iter().enumerate() {
            idx = idx * self.inputs[j] + x;
        }
        idx
    }

    pub fn decode_setting(&self, mut s_idx: usize, out: &mut [usize]) {
        for j in (0..self.n_copies).rev() {
            out[j] = s_idx % self.inputs[j];
            s_idx /= self.inputs[j];
        }
    }

    /// Bit position of a copy in outcome and subset masks (copy 0 is the most
    /// significant bit, matching the event index layout).
    #[inline]
    pub fn bit(&self, copy_pos: usize) -> usize {
        self.n_copies - 1 - copy_pos
    }

    /// Coordinate id of the correlator `(members of mask, their settings)`;
    /// digits are packed ascending by copy position, first most significant.
    pub fn coord_id(&self, mask: usize, setting: &[usize]) -> usize {
        let mut packed = 0usize;
        for j in 0..self.n_copies {
            if mask >> self.bit(j) & 1 == 1 {
                packed = packed * self.inputs[j] + setting[j];
            }
        }
        self.coord_offset[mask] + packed
    }
}

/// The assembled `LP_sat` data: marginalization matrix `M1`, homogeneous
/// matrix `M2` (base orientation; the dual interface doubles it into ± pairs
/// so nonnegative multipliers lose no generality), and the normalization
/// functional `c`, plus the internal symmetry-reduced coordinates every LP
/// call actually runs on.
#[derive(Debug, Clone)]
pub struct InflationConstraintSystem {
    pub(crate) scenario: Scenario,
    pub(crate) blocks: Vec<Block>,
    pub(crate) n_cols: usize,
    pub(crate) m1: Vec<SparseRow>,
    pub(crate) m2_base: Vec<(M2Kind, SparseRow)>,
    pub(crate) c: SparseRow,
    pub(crate) canonical: InjectableSet,
    // Reduced coordinates: z indexes unified correlator orbits.
    pub(crate) n_z: usize,
    pub(crate) coord_to_z: Vec<u32>,
    pub(crate) positivity_z: Vec<SparseRow>,
    pub(crate) m1_z: Vec<SparseRow>,
    pub(crate) c_z: usize,
}

impl InflationConstraintSystem {
    pub fn n_columns(&self) -> usize {
        self.n_cols
    }

    pub fn n_observed_events(&self) -> usize {
        self.m1.len()
    }

    pub fn m1_rows(&self) -> &[SparseRow] {
        &self.m1
    }

    pub fn m2_base_rows(&self) -> &[(M2Kind, SparseRow)] {
        &self.m2_base
    }

    /// Number of M2 rows in the ±-paired dual convention.
    pub fn n_m2_rows(&self) -> usize {
        2 * self.m2_base.len()
    }

    pub fn c_row(&self) -> &SparseRow {
        &self.c
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// The canonical full-size injectable set that carries `M1` and `c`.
    pub fn canonical_set(&self) -> &InjectableSet {
        &self.canonical
    }

    /// `c·x` for an event-space vector.
    pub fn c_dot(&self, x: &[f64]) -> f64 {
        self.c.dot(x)
    }

    /// The event-space LP (`min c·x` over `M1·x ≥ p`, `M2·x = 0`, `x ≥ 0`, or
    /// the feasibility variant with `M1·x = p`), for export and for direct
    /// cross-checks on small systems.
    pub fn to_lp(&self, p: &Behavior, optimization: bool) -> Result<LinearProgram, InflationError> {
        self.check_behavior(p)?;
        let n = self.n_cols;
        let mut constraints = Vec::new();
        for (row, &rhs) in self.m1.iter().zip(p.table()) {
            constraints.push(Constraint {
                coeffs: row.to_dense(n),
                relation: if optimization { Relation::Ge } else { Relation::Eq },
                rhs,
            });
        }
        for (_, row) in &self.m2_base {
            constraints.push(Constraint {
                coeffs: row.to_dense(n),
                relation: Relation::Eq,
                rhs: 0.0,
            });
        }
        let objective = if optimization {
            self.c.to_dense(n)
        } else {
            vec![0.0; n]
        };
        Ok(LinearProgram::new(Sense::Minimize, objective, constraints))
    }

    pub(crate) fn check_behavior(&self, p: &Behavior) -> Result<(), InflationError> {
        if p.inputs() != self.scenario.inputs() {
            return Err(InflationError::ScenarioMismatch(format!(
                "behavior signature {:?} does not match scenario {:?}",
                p.inputs(),
                self.scenario.inputs()
            )));
        }
        Ok(())
    }

    /// The reduced coordinates of the product inflation distribution
    /// (the observed behavior placed independently on every wiring
    /// component), available when each component of every block carries at
    /// most one copy per role. It satisfies all constraints whenever the
    /// behavior is nonsignalling, which makes it an ideal simplex start.
    pub(crate) fn product_shift(&self, table: &[f64]) -> Option<Vec<f64>> {
        let n = self.scenario.n_parties();
        let obs_inputs = self.scenario.inputs().to_vec();
        let corr = |members: &[(usize, usize)]| -> f64 {
            // ⟨∏ roles⟩ at the given settings, others at input 0.
            let mut setting = vec![0usize; n];
            for &(role, s) in members {
                setting[role] = s;
            }
            let mut x_idx = 0usize;
            for (p, &x) in setting.iter().enumerate() {
                x_idx = x_idx * obs_inputs[p] + x;
            }
            let n_outcomes = 1usize << n;
            let mut acc = 0.0;
            for a in 0..n_outcomes {
                let mut parity = 0u32;
                for &(role, _) in members {
                    parity ^= (a >> (n - 1 - role)) as u32 & 1;
                }
                let v = table[x_idx * n_outcomes + a];
                acc += if parity == 1 { -v } else { v };
            }
            acc
        };

        let mut z0 = vec![0.0; self.n_z];
        for block in &self.blocks {
            let comps = block.product_components.as_ref()?;
            let mut setting = vec![0usize; block.n_copies];
            for mask in 0..block.n_events {
                let members: Vec<usize> = (0..block.n_copies)
                    .filter(|&j| mask >> block.bit(j) & 1 == 1)
                    .collect();
                let sizes: Vec<usize> = members.iter().map(|&j| block.inputs[j]).collect();
                let count: usize = sizes.iter().product();
                for packed in 0..count {
                    let mut rem = packed;
                    for i in (0..members.len()).rev() {
                        setting[members[i]] = rem % sizes[i];
                        rem /= sizes[i];
                    }
                    // Product over wiring components.
                    let mut value = 1.0;
                    let mut comp_ids: Vec<usize> = members.iter().map(|&j| comps[j]).collect();
                    comp_ids.sort_unstable();
                    comp_ids.dedup();
                    for &cid in &comp_ids {
                        let part: Vec<(usize, usize)> = members
                            .iter()
                            .filter(|&&j| comps[j] == cid)
                            .map(|&j| (block.graph.party_copies[j].role, setting[j]))
                            .collect();
                        value *= corr(&part);
                    }
                    let id = block.coord_global_offset + block.coord_offset[mask] + packed;
                    z0[self.coord_to_z[id] as usize] = value;
                }
            }
        }
        Some(z0)
    }

    /// Expands a reduced coordinate vector into the event-space vector.
    pub(crate) fn lift(&self, z: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_cols];
        for block in &self.blocks {
            let scale = 1.0 / block.n_events as f64;
            let mut setting = vec![0usize; block.n_copies];
            for v in 0..block.n_cols {
                let (s_idx, a_idx) = block.decode_col(v);
                block.decode_setting(s_idx, &mut setting);
                let mut acc = 0.0;
                for mask in 0..block.n_events {
                    let zi = self.coord_to_z
                        [block.coord_global_offset + block.coord_id(mask, &setting)]
                        as usize;
                    let sign = if ((a_idx & mask).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
                    acc += sign * z[zi];
                }
                x[block.col_offset + v] = acc * scale;
            }
        }
        x
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Lowest id wins, keeping representatives deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Builds the constraint system for one inflation graph.
pub fn build_constraint_system(
    g: &InflationGraph,
    s: &Scenario,
) -> Result<InflationConstraintSystem, InflationError> {
    build_constraint_system_multi(std::slice::from_ref(g), s)
}

/// Builds a joint constraint system over several inflation graphs. The first
/// graph must contain a full-size injectable set (it carries `M1` and `c`);
/// marginals on injectable sets of the other graphs are tied to it through
/// homogeneous cross-graph rows.
pub fn build_constraint_system_multi(
    graphs: &[InflationGraph],
    s: &Scenario,
) -> Result<InflationConstraintSystem, InflationError> {
    if graphs.is_empty() {
        return Err(InflationError::ScenarioMismatch("no inflation graphs".into()));
    }
    let n = s.n_parties();

    // Validate and assemble block metadata.
    let mut blocks = Vec::with_capacity(graphs.len());
    let mut col_offset = 0usize;
    let mut coord_global_offset = 0usize;
    for g in graphs {
        let report = validate_nonfanout(g);
        if !report.valid {
            return Err(InflationError::NotNonfanout(report.diagnostics.join("; ")));
        }
        for pc in &g.party_copies {
            if pc.role >= n {
                return Err(InflationError::ScenarioMismatch(format!(
                    "party role {} outside scenario",
                    pc.role
                )));
            }
        }
        for sc in &g.source_copies {
            if sc.role >= s.n_source_roles() || sc.scope != s.source_scope(sc.role) {
                return Err(InflationError::ScenarioMismatch(format!(
                    "source copy ({}, {}) scope does not match the scenario",
                    sc.role, sc.copy
                )));
            }
        }
        let n_copies = g.party_copies.len();
        if n_copies == 0 {
            return Err(InflationError::ScenarioMismatch("graph has no party copies".into()));
        }
        if n_copies > 20 {
            return Err(InflationError::SizeCap { estimate: usize::MAX });
        }
        let inputs: Vec<usize> = g.party_copies.iter().map(|pc| s.inputs()[pc.role]).collect();
        let n_settings: usize = inputs.iter().product();
        let n_events = 1usize << n_copies;
        let n_cols = n_settings
            .checked_mul(n_events)
            .ok_or(InflationError::SizeCap { estimate: usize::MAX })?;

        let group = automorphisms(g)?;

        // Column orbits under the group.
        let mut orbit_of_col = vec![u32::MAX; n_cols];
        let mut orbit_reps = Vec::new();
        let mut setting = vec![0usize; n_copies];
        let mut image_setting = vec![0usize; n_copies];
        for v in 0..n_cols {
            if orbit_of_col[v] != u32::MAX {
                continue;
            }
            let orbit_id = orbit_reps.len() as u32;
            orbit_reps.push(v);
            // Scan the whole group; orbits are tiny.
            let mut stack = vec![v];
            orbit_of_col[v] = orbit_id;
            while let Some(w) = stack.pop() {
                let s_idx = w / n_events;
                let a_idx = w % n_events;
                let mut rem = s_idx;
                for j in (0..n_copies).rev() {
                    setting[j] = rem % inputs[j];
                    rem /= inputs[j];
                }
                for perm in &group {
                    let mut a_img = 0usize;
                    for j in 0..n_copies {
                        image_setting[perm[j]] = setting[j];
                        if a_idx >> (n_copies - 1 - j) & 1 == 1 {
                            a_img |= 1 << (n_copies - 1 - perm[j]);
                        }
                    }
                    let mut s_img = 0usize;
                    for (j, &x) in image_setting.iter().enumerate() {
                        s_img = s_img * inputs[j] + x;
                    }
                    let w_img = s_img * n_events + a_img;
                    if orbit_of_col[w_img] == u32::MAX {
                        orbit_of_col[w_img] = orbit_id;
                        stack.push(w_img);
                    }
                }
            }
        }

        // Correlator coordinate layout (mask bits are copy-0-MSB, like event
        // indices).
        let mut coord_offset = vec![0usize; n_events];
        let mut acc = 0usize;
        for mask in 0..n_events {
            coord_offset[mask] = acc;
            let mut size = 1usize;
            for j in 0..n_copies {
                if mask >> (n_copies - 1 - j) & 1 == 1 {
                    size *= inputs[j];
                }
            }
            acc += size;
        }

        // Wiring components and per-component role uniqueness.
        let product_components = {
            let mut comp: Vec<usize> = (0..n_copies).collect();
            // Union copies sharing a source copy.
            fn root(comp: &mut [usize], mut i: usize) -> usize {
                while comp[i] != i {
                    comp[i] = comp[comp[i]];
                    i = comp[i];
                }
                i
            }
            for si in 0..g.source_copies.len() {
                let targets = g.targets_of(si);
                for pair in targets.windows(2) {
                    let (a, b) = (root(&mut comp, pair[0]), root(&mut comp, pair[1]));
                    if a != b {
                        comp[a.max(b)] = a.min(b);
                    }
                }
            }
            let roots: Vec<usize> = (0..n_copies).map(|i| root(&mut comp, i)).collect();
            let mut ok = true;
            for i in 0..n_copies {
                for j in (i + 1)..n_copies {
                    if roots[i] == roots[j]
                        && g.party_copies[i].role == g.party_copies[j].role
                    {
                        ok = false;
                    }
                }
            }
            ok.then_some(roots)
        };

        blocks.push(Block {
            graph: g.clone(),
            col_offset,
            n_copies,
            inputs,
            n_events,
            n_cols,
            group,
            orbit_of_col,
            orbit_reps,
            coord_offset,
            coord_global_offset,
            product_components,
        });
        col_offset += n_cols;
        coord_global_offset += acc;
    }
    let n_cols = col_offset;
    let n_coords_total = coord_global_offset;

    // The canonical injectable set lives in block 0.
    let canonical = canonical_injectable_set(&blocks[0].graph, s)
        .ok_or(InflationError::NoInjectableSet)?;

    let injectables: Vec<Vec<InjectableSet>> = blocks
        .iter()
        .map(|b| injectable_sets(&b.graph, s))
        .collect();

    // --- Event-space M1 ---------------------------------------------------
    let n_obs_settings: usize = s.inputs().iter().product();
    let n_obs_events = 1usize << n;
    let block0 = &blocks[0];
    let canon_pos = &canonical.copies; // aligned with roles 0..n
    let mut m1 = Vec::with_capacity(n_obs_settings * n_obs_events);
    {
        let free: Vec<usize> =
            (0..block0.n_copies).filter(|j| !canon_pos.contains(j)).collect();
        let mut obs_setting = vec![0usize; n];
        for x_idx in 0..n_obs_settings {
            let mut rem = x_idx;
            for p in (0..n).rev() {
                obs_setting[p] = rem % s.inputs()[p];
                rem /= s.inputs()[p];
            }
            let mut setting = vec![0usize; block0.n_copies];
            for (role, &pos) in canon_pos.iter().enumerate() {
                setting[pos] = obs_setting[role];
            }
            let s_idx = block0.setting_index(&setting);
            for a_idx in 0..n_obs_events {
                let mut base = 0usize;
                for (role, &pos) in canon_pos.iter().enumerate() {
                    if a_idx >> (n - 1 - role) & 1 == 1 {
                        base |= 1 << (block0.n_copies - 1 - pos);
                    }
                }
                let mut entries = Vec::with_capacity(1 << free.len());
                for rest in 0..(1usize << free.len()) {
                    let mut a_full = base;
                    for (bit, &pos) in free.iter().enumerate() {
                        if rest >> bit & 1 == 1 {
                            a_full |= 1 << (block0.n_copies - 1 - pos);
                        }
                    }
                    entries.push((block0.col_offset + block0.col(s_idx, a_full), 1.0));
                }
                m1.push(SparseRow(entries));
            }
        }
    }

    // --- Event-space M2 ---------------------------------------------------
    let mut m2_base: Vec<(M2Kind, SparseRow)> = Vec::new();
    for block in &blocks {
        for row in nonsignalling_rows(&block.inputs) {
            let shifted = row.into_iter().map(|(j, v)| (block.col_offset + j, v)).collect();
            m2_base.push((M2Kind::Nonsignalling, SparseRow(shifted)));
        }
        for v in 0..block.n_cols {
            let rep = block.orbit_reps[block.orbit_of_col[v] as usize];
            if v != rep {
                m2_base.push((
                    M2Kind::Automorphism,
                    SparseRow(vec![
                        (block.col_offset + rep, 1.0),
                        (block.col_offset + v, -1.0),
                    ]),
                ));
            }
        }
    }
    // Injectable-set marginal equalities against the canonical set.
    for (bi, block) in blocks.iter().enumerate() {
        for set in &injectables[bi] {
            let canon_restricted: Vec<usize> =
                set.roles.iter().map(|&r| canon_pos[r]).collect();
            if bi == 0 && set.copies == canon_restricted {
                continue;
            }
            let k = set.roles.len();
            let role_inputs: Vec<usize> = set.roles.iter().map(|&r| s.inputs()[r]).collect();
            let n_x: usize = role_inputs.iter().product();
            let mut digits = vec![0usize; k];
            for x_idx in 0..n_x {
                let mut rem = x_idx;
                for i in (0..k).rev() {
                    digits[i] = rem % role_inputs[i];
                    rem /= role_inputs[i];
                }
                for a_idx in 0..(1usize << k) {
                    let mut entries = marginal_entries(block, &set.copies, &digits, a_idx, 1.0);
                    entries.extend(marginal_entries(
                        &blocks[0],
                        &canon_restricted,
                        &digits,
                        a_idx,
                        -1.0,
                    ));
                    m2_base.push((M2Kind::InjectableMarginal, SparseRow(entries)));
                }
            }
        }
    }

    // --- c ------------------------------------------------------------
    let c = SparseRow(
        (0..blocks[0].n_events)
            .map(|a| (blocks[0].col_offset + blocks[0].col(0, a), 1.0))
            .collect(),
    );

    // Size cap on total stored nonzeros.
    let nnz: usize = m1.iter().map(|r| r.0.len()).sum::<usize>()
        + m2_base.iter().map(|(_, r)| r.0.len()).sum::<usize>()
        + c.0.len();
    if nnz > 1_000_000 {
        return Err(InflationError::SizeCap { estimate: nnz });
    }

    // --- Reduction: unify correlator coordinates ---------------------------
    let mut uf = UnionFind::new(n_coords_total);
    // (a) automorphism orbits of coordinates.
    for block in &blocks {
        let mut setting = vec![0usize; block.n_copies];
        let mut img_setting = vec![0usize; block.n_copies];
        for mask in 0..block.n_events {
            let members: Vec<usize> = (0..block.n_copies)
                .filter(|&j| mask >> block.bit(j) & 1 == 1)
                .collect();
            let mut sizes = Vec::with_capacity(members.len());
            for &j in &members {
                sizes.push(block.inputs[j]);
            }
            let count: usize = sizes.iter().product();
            for packed in 0..count {
                let mut rem = packed;
                for i in (0..members.len()).rev() {
                    setting[members[i]] = rem % sizes[i];
                    rem /= sizes[i];
                }
                let id = block.coord_global_offset + block.coord_offset[mask] + packed;
                for perm in &block.group {
                    let mut img_mask = 0usize;
                    for &j in &members {
                        img_mask |= 1 << block.bit(perm[j]);
                        img_setting[perm[j]] = setting[j];
                    }
                    let img_id = block.coord_global_offset + block.coord_id(img_mask, &img_setting);
                    uf.union(id, img_id);
                }
            }
        }
    }
    // (b) injectable-set coordinates against canonical coordinates, all
    // subsets including the empty one (which ties the per-block masses).
    for (bi, block) in blocks.iter().enumerate() {
        for set in &injectables[bi] {
            let k = set.roles.len();
            for sub in 0..(1usize << k) {
                let idxs: Vec<usize> = (0..k).filter(|i| sub >> i & 1 == 1).collect();
                let role_inputs: Vec<usize> =
                    idxs.iter().map(|&i| s.inputs()[set.roles[i]]).collect();
                let count: usize = role_inputs.iter().product();
                let mut digits = vec![0usize; idxs.len()];
                for packed in 0..count {
                    let mut rem = packed;
                    for i in (0..idxs.len()).rev() {
                        digits[i] = rem % role_inputs[i];
                        rem /= role_inputs[i];
                    }
                    let id_here = coord_of_members(
                        block,
                        idxs.iter().map(|&i| set.copies[i]),
                        &digits,
                    );
                    let id_canon = coord_of_members(
                        &blocks[0],
                        idxs.iter().map(|&i| canon_pos[set.roles[i]]),
                        &digits,
                    );
                    uf.union(
                        block.coord_global_offset + id_here,
                        blocks[0].coord_global_offset + id_canon,
                    );
                }
            }
        }
    }

    // Dense z indices for representatives.
    let mut coord_to_z = vec![u32::MAX; n_coords_total];
    let mut n_z = 0usize;
    for id in 0..n_coords_total {
        let rep = uf.find(id);
        if coord_to_z[rep] == u32::MAX {
            coord_to_z[rep] = n_z as u32;
            n_z += 1;
        }
        coord_to_z[id] = coord_to_z[rep];
    }

    // Positivity rows over z: one per column orbit, scaled by 2^K.
    let mut positivity_z = Vec::new();
    for block in &blocks {
        let mut rows: Vec<std::collections::HashMap<u32, f64>> =
            vec![std::collections::HashMap::new(); block.orbit_reps.len()];
        let mut setting = vec![0usize; block.n_copies];
        for v in 0..block.n_cols {
            let (s_idx, a_idx) = block.decode_col(v);
            block.decode_setting(s_idx, &mut setting);
            let row = &mut rows[block.orbit_of_col[v] as usize];
            for mask in 0..block.n_events {
                let zi = coord_to_z[block.coord_global_offset + block.coord_id(mask, &setting)];
                let sign = if ((a_idx & mask).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
                *row.entry(zi).or_insert(0.0) += sign;
            }
        }
        for row in rows {
            let mut entries: Vec<(usize, f64)> = row
                .into_iter()
                .filter(|&(_, v)| v.abs() > 1e-12)
                .map(|(j, v)| (j as usize, v))
                .collect();
            entries.sort_unstable_by_key(|&(j, _)| j);
            positivity_z.push(SparseRow(entries));
        }
    }

    // Reduced M1 rows.
    let mut m1_z = Vec::with_capacity(n_obs_settings * n_obs_events);
    {
        let block0 = &blocks[0];
        let scale = 1.0 / n_obs_events as f64;
        let mut obs_setting = vec![0usize; n];
        for x_idx in 0..n_obs_settings {
            let mut rem = x_idx;
            for p in (0..n).rev() {
                obs_setting[p] = rem % s.inputs()[p];
                rem /= s.inputs()[p];
            }
            for a_idx in 0..n_obs_events {
                let mut acc: std::collections::HashMap<u32, f64> = std::collections::HashMap::new();
                for roles_mask in 0..n_obs_events {
                    let idxs: Vec<usize> = (0..n).filter(|p| roles_mask >> p & 1 == 1).collect();
                    let digits: Vec<usize> = idxs.iter().map(|&p| obs_setting[p]).collect();
                    let id = coord_of_members(block0, idxs.iter().map(|&p| canon_pos[p]), &digits);
                    let zi = coord_to_z[block0.coord_global_offset + id];
                    // Outcome parity over the chosen roles; a_idx bits are
                    // role-indexed MSB-first.
                    let mut parity = 0u32;
                    for &p in &idxs {
                        parity ^= (a_idx >> (n - 1 - p)) as u32 & 1;
                    }
                    let sign = if parity == 1 { -scale } else { scale };
                    *acc.entry(zi).or_insert(0.0) += sign;
                }
                let mut entries: Vec<(usize, f64)> = acc
                    .into_iter()
                    .filter(|&(_, v)| v.abs() > 1e-15)
                    .map(|(j, v)| (j as usize, v))
                    .collect();
                entries.sort_unstable_by_key(|&(j, _)| j);
                m1_z.push(SparseRow(entries));
            }
        }
    }

    let c_z = coord_to_z[blocks[0].coord_global_offset + blocks[0].coord_offset[0]] as usize;

    Ok(InflationConstraintSystem {
        scenario: s.clone(),
        blocks,
        n_cols,
        m1,
        m2_base,
        c,
        canonical,
        n_z,
        coord_to_z,
        positivity_z,
        m1_z,
        c_z,
    })
}

fn coord_of_members(
    block: &Block,
    members: impl Iterator<Item = usize>,
    digits: &[usize],
) -> usize {
    let mut pairs: Vec<(usize, usize)> = members.zip(digits.iter().copied()).collect();
    pairs.sort_unstable_by_key(|&(pos, _)| pos);
    let mut mask = 0usize;
    let mut packed = 0usize;
    for &(pos, d) in &pairs {
        mask |= 1 << block.bit(pos);
        packed = packed * block.inputs[pos] + d;
    }
    block.coord_offset[mask] + packed
}

/// Entries of the marginal of `copies` (one per role, digits aligned) at the
/// given outcome bits, every other copy at input 0, scaled by `weight`.
fn marginal_entries(
    block: &Block,
    copies: &[usize],
    setting_digits: &[usize],
    a_idx: usize,
    weight: f64,
) -> Vec<(usize, f64)> {
    let k = copies.len();
    let mut setting = vec![0usize; block.n_copies];
    for (i, &pos) in copies.iter().enumerate() {
        setting[pos] = setting_digits[i];
    }
    let s_idx = block.setting_index(&setting);
    let mut base = 0usize;
    for (i, &pos) in copies.iter().enumerate() {
        if a_idx >> (k - 1 - i) & 1 == 1 {
            base |= 1 << (block.n_copies - 1 - pos);
        }
    }
    let free: Vec<usize> = (0..block.n_copies).filter(|j| !copies.contains(j)).collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for rest in 0..(1usize << free.len()) {
        let mut a_full = base;
        for (bit, &pos) in free.iter().enumerate() {
            if rest >> bit & 1 == 1 {
                a_full |= 1 << (block.n_copies - 1 - pos);
            }
        }
        out.push((block.col_offset + block.col(s_idx, a_full), weight));
    }
    out
}
