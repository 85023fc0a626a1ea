//! Independent combinatorial oracle: depth-first search for sets of
//! pairwise-orthogonal striations, without reference to finite fields or
//! the algebraic construction. Used to rediscover how many striations each
//! dimension admits and to generate fixtures.
//!
//! A column here is one striation: a length-d² vector of group labels,
//! each label used exactly d times. Two columns are compatible when every
//! pair of labels co-occurs at exactly one point.

use crate::designs::StriationTable;
use crate::report::Witness;
use crate::{Error, Result};

/// Default node budget for searches (one node per attempted assignment).
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Largest dimension `max_striations` accepts.
pub const SEARCH_DIM_BOUND: usize = 6;

/// The striation grouping points by square row: s(I) = I / d.
pub fn row_striation(d: usize) -> Vec<u16> {
    (0..d * d).map(|i| (i / d) as u16).collect()
}

/// The striation grouping points by square column: s(I) = I % d.
pub fn column_striation(d: usize) -> Vec<u16> {
    (0..d * d).map(|i| (i % d) as u16).collect()
}

fn validate_column(d: usize, column: &[u16]) -> Result<()> {
    if column.len() != d * d {
        return Err(Error::Shape(format!(
            "column has {} cells, expected {}",
            column.len(),
            d * d
        )));
    }
    let mut counts = vec![0usize; d];
    for &label in column {
        let l = usize::from(label);
        if l >= d {
            return Err(Error::Shape(format!("label {label} outside 0..{d}")));
        }
        counts[l] += 1;
    }
    if counts.iter().any(|&c| c != d) {
        return Err(Error::Shape(format!(
            "column is not a striation: group sizes {counts:?}, want all {d}"
        )));
    }
    Ok(())
}

fn columns_orthogonal(d: usize, a: &[u16], b: &[u16]) -> bool {
    let mut seen = vec![false; d * d];
    for (&x, &y) in a.iter().zip(b) {
        let pair = usize::from(x) * d + usize::from(y);
        if seen[pair] {
            return false;
        }
        seen[pair] = true;
    }
    true
}

/// A growing set of pairwise-orthogonal striations on a d×d point grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialDesign {
    d: usize,
    columns: Vec<Vec<u16>>,
}

impl PartialDesign {
    pub fn empty(d: usize) -> Result<Self> {
        if d < 2 || d > crate::designs::MAX_DIM {
            return Err(Error::Shape(format!(
                "design dimension {d} outside supported range 2..={}",
                crate::designs::MAX_DIM
            )));
        }
        Ok(PartialDesign { d, columns: Vec::new() })
    }

    /// Validate every column as a striation and every pair as orthogonal.
    pub fn with_columns(d: usize, columns: Vec<Vec<u16>>) -> Result<Self> {
        let mut pd = PartialDesign::empty(d)?;
        for column in columns {
            pd = pd.extended_with(column)?;
        }
        Ok(pd)
    }

    /// Append one more striation, re-checking the invariants.
    pub fn extended_with(&self, column: Vec<u16>) -> Result<Self> {
        validate_column(self.d, &column)?;
        for (k, existing) in self.columns.iter().enumerate() {
            if !columns_orthogonal(self.d, existing, &column) {
                return Err(Error::Shape(format!(
                    "new column is not orthogonal to column {k}"
                )));
            }
        }
        let mut next = self.clone();
        next.columns.push(column);
        Ok(next)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn columns(&self) -> &[Vec<u16>] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// A design with exactly d+1 columns transposes into a full striation
    /// table (columns become table columns in stored order).
    pub fn to_striation_table(&self) -> Result<StriationTable> {
        if self.columns.len() != self.d + 1 {
            return Err(Error::Shape(format!(
                "need exactly {} columns to form a table, have {}",
                self.d + 1,
                self.columns.len()
            )));
        }
        let rows: Vec<Vec<u16>> = (0..self.d * self.d)
            .map(|i| self.columns.iter().map(|c| c[i]).collect())
            .collect();
        StriationTable::from_rows(self.d, &rows)
    }
}

/// Result of trying to extend a design by one striation.
#[derive(Clone, Debug)]
pub enum ExtendOutcome {
    /// A compatible new column exists; `nodes` were spent finding it.
    Extended { column: Vec<u16>, nodes: u64 },
    /// The search space was exhausted — no compatible column exists.
    /// This is a complete-search statement, not a budget artifact.
    ExhaustedNoExtension { nodes: u64 },
    /// The node budget ran out before the search finished.
    BudgetExceeded { nodes: u64 },
}

/// Whether an existing column forces every candidate's first square row to
/// have pairwise-distinct labels (any column constant on that row does),
/// making the relabel-to-identity normalization lossless.
fn identity_row_is_sound(d: usize, existing: &[Vec<u16>]) -> bool {
    existing.iter().any(|c| c[..d].iter().all(|&l| l == c[0]))
}

enum Dfs {
    Found,
    Exhausted,
    OutOfBudget,
}

/// Per-column constraint state for the cell-by-cell search: label usage
/// counts and, per existing column, which label pairs are already taken.
struct LevelState {
    column: Vec<u16>,
    counts: Vec<usize>,
    used: Vec<Vec<bool>>,
    force_identity: bool,
}

impl LevelState {
    fn new(d: usize, existing: &[Vec<u16>]) -> Self {
        LevelState {
            column: vec![0; d * d],
            counts: vec![0; d],
            used: vec![vec![false; d * d]; existing.len()],
            force_identity: identity_row_is_sound(d, existing),
        }
    }
}

struct ColumnSearch<'a> {
    d: usize,
    existing: &'a [Vec<u16>],
    level: LevelState,
    nodes: u64,
    budget: u64,
}

impl ColumnSearch<'_> {
    fn new(d: usize, existing: &[Vec<u16>], budget: u64) -> ColumnSearch<'_> {
        ColumnSearch { d, existing, level: LevelState::new(d, existing), nodes: 0, budget }
    }

    fn dfs(&mut self, pos: usize) -> Dfs {
        if pos == self.d * self.d {
            return Dfs::Found;
        }
        let candidates = if self.level.force_identity && pos < self.d {
            pos as u16..pos as u16 + 1
        } else {
            0..self.d as u16
        };
        for v in candidates {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Dfs::OutOfBudget;
            }
            let label = usize::from(v);
            if self.level.counts[label] == self.d {
                continue;
            }
            let mut conflict = false;
            for (k, col) in self.existing.iter().enumerate() {
                if self.level.used[k][label * self.d + usize::from(col[pos])] {
                    conflict = true;
                    break;
                }
            }
            if conflict {
                continue;
            }
            self.level.counts[label] += 1;
            for (k, col) in self.existing.iter().enumerate() {
                self.level.used[k][label * self.d + usize::from(col[pos])] = true;
            }
            self.level.column[pos] = v;
            match self.dfs(pos + 1) {
                Dfs::Found => return Dfs::Found,
                Dfs::OutOfBudget => return Dfs::OutOfBudget,
                Dfs::Exhausted => {
                    self.level.counts[label] -= 1;
                    for (k, col) in self.existing.iter().enumerate() {
                        self.level.used[k][label * self.d + usize::from(col[pos])] = false;
                    }
                }
            }
        }
        Dfs::Exhausted
    }
}

/// Search for one more striation compatible with the design.
///
/// From an empty design the first two columns are fixed to the row and
/// column striations (any orthogonal pair can be moved there by relabeling
/// points, so nothing is lost); an arbitrary later column is found by
/// depth-first search over cells in point order, values ascending.
pub fn extend(pd: &PartialDesign, budget: u64) -> ExtendOutcome {
    let d = pd.d();
    if budget == 0 {
        return ExtendOutcome::BudgetExceeded { nodes: 0 };
    }
    if pd.is_empty() {
        return ExtendOutcome::Extended { column: row_striation(d), nodes: 1 };
    }
    if pd.len() == 1 && pd.columns()[0] == row_striation(d) {
        return ExtendOutcome::Extended { column: column_striation(d), nodes: 1 };
    }
    let mut search = ColumnSearch::new(d, pd.columns(), budget);
    match search.dfs(0) {
        Dfs::Found => ExtendOutcome::Extended { column: search.level.column, nodes: search.nodes },
        Dfs::Exhausted => ExtendOutcome::ExhaustedNoExtension { nodes: search.nodes },
        Dfs::OutOfBudget => ExtendOutcome::BudgetExceeded { nodes: search.nodes },
    }
}

enum Flow {
    /// Every design containing the fixed prefix was visited.
    Exhausted,
    /// A design with d+1 columns was reached — the theoretical ceiling.
    Ceiling,
    OutOfBudget,
}

/// Depth-first search over whole designs: columns are added cell by cell,
/// and when one completes the search recurses to the next column rather
/// than stopping, backtracking across columns when a branch dead-ends.
struct TreeSearch {
    d: usize,
    ceiling: usize,
    columns: Vec<Vec<u16>>,
    best: Vec<Vec<u16>>,
    nodes: u64,
    budget: u64,
}

impl TreeSearch {
    fn new(d: usize, prefix: Vec<Vec<u16>>, budget: u64) -> Self {
        TreeSearch {
            d,
            ceiling: d + 1,
            best: prefix.clone(),
            columns: prefix,
            nodes: 0,
            budget,
        }
    }

    fn column_level(&mut self) -> Flow {
        if self.columns.len() > self.best.len() {
            self.best = self.columns.clone();
        }
        if self.columns.len() == self.ceiling {
            return Flow::Ceiling;
        }
        let mut level = LevelState::new(self.d, &self.columns);
        self.cell_dfs(&mut level, 0)
    }

    fn cell_dfs(&mut self, level: &mut LevelState, pos: usize) -> Flow {
        if pos == self.d * self.d {
            self.columns.push(level.column.clone());
            let below = self.column_level();
            self.columns.pop();
            return match below {
                Flow::Exhausted => Flow::Exhausted,
                stop => stop,
            };
        }
        let candidates = if level.force_identity && pos < self.d {
            pos as u16..pos as u16 + 1
        } else {
            0..self.d as u16
        };
        for v in candidates {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Flow::OutOfBudget;
            }
            let label = usize::from(v);
            if level.counts[label] == self.d {
                continue;
            }
            let mut conflict = false;
            for (k, col) in self.columns.iter().enumerate() {
                if level.used[k][label * self.d + usize::from(col[pos])] {
                    conflict = true;
                    break;
                }
            }
            if conflict {
                continue;
            }
            level.counts[label] += 1;
            for (k, col) in self.columns.iter().enumerate() {
                level.used[k][label * self.d + usize::from(col[pos])] = true;
            }
            level.column[pos] = v;
            match self.cell_dfs(level, pos + 1) {
                Flow::Exhausted => {
                    level.counts[label] -= 1;
                    for (k, col) in self.columns.iter().enumerate() {
                        level.used[k][label * self.d + usize::from(col[pos])] = false;
                    }
                }
                stop => return stop,
            }
        }
        Flow::Exhausted
    }
}

/// What the maximum-search concluded for one dimension.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub d: usize,
    /// Number of pairwise-orthogonal striations found.
    pub count: usize,
    pub design: PartialDesign,
    /// True when the count is demonstrated maximal: either it hit the
    /// theoretical ceiling d+1, or the search space was exhausted within
    /// budget (plain mode visits every design over the canonical pair;
    /// all-squares mode shows every reduced Latin square partnerless).
    pub proven: bool,
    pub nodes: u64,
    /// Number-theoretic exclusion: d ≡ 1 or 2 (mod 4) and d not a sum of
    /// two integer squares rules out a full set of d+1 striations.
    /// Informational only.
    pub bruck_ryser_excluded: bool,
    /// All-squares mode: how many reduced Latin squares were examined.
    pub squares_scanned: Option<u64>,
}

/// True when the classical counting argument alone rules out d+1
/// pairwise-orthogonal striations.
pub fn bruck_ryser_excluded(d: usize) -> bool {
    let residue = d % 4;
    if residue != 1 && residue != 2 {
        return false;
    }
    let mut a = 0usize;
    while a * a * 2 <= d {
        let rest = d - a * a;
        let b = (rest as f64).sqrt().round() as usize;
        if b * b == rest {
            return false;
        }
        a += 1;
    }
    true
}

fn check_search_dim(d: usize) -> Result<()> {
    if !(2..=SEARCH_DIM_BOUND).contains(&d) {
        return Err(Error::SearchBoundExceeded { dim: d, bound: SEARCH_DIM_BOUND });
    }
    Ok(())
}

/// Find the largest set of pairwise-orthogonal striations starting from
/// the canonical row/column pair, backtracking over all later columns.
/// `proven` is true when the answer is demonstrated maximal (ceiling hit,
/// or full exhaustion within budget).
pub fn max_striations(d: usize, budget: u64) -> Result<SearchResult> {
    check_search_dim(d)?;
    let prefix = vec![row_striation(d), column_striation(d)];
    let mut tree = TreeSearch::new(d, prefix, budget);
    let flow = tree.column_level();
    let proven = !matches!(flow, Flow::OutOfBudget);
    let design = PartialDesign::with_columns(d, tree.best)?;
    assert!(design.len() <= d + 1, "more than d+1 pairwise-orthogonal striations");
    eprintln!(
        "search d={d}: best {} striations after {} nodes ({})",
        design.len(),
        tree.nodes,
        if proven { "complete" } else { "budget exhausted" }
    );
    Ok(SearchResult {
        d,
        count: design.len(),
        design,
        proven,
        nodes: tree.nodes,
        bruck_ryser_excluded: bruck_ryser_excluded(d),
        squares_scanned: None,
    })
}

struct SquareEnumerator {
    d: usize,
    cells: Vec<u16>,
    row_used: Vec<Vec<bool>>,
    col_used: Vec<Vec<bool>>,
    nodes: u64,
    budget: u64,
    out_of_budget: bool,
}

impl SquareEnumerator {
    fn new(d: usize, budget: u64) -> Self {
        SquareEnumerator {
            d,
            cells: vec![0; d * d],
            row_used: vec![vec![false; d]; d],
            col_used: vec![vec![false; d]; d],
            nodes: 0,
            budget,
            out_of_budget: false,
        }
    }

    /// Visit every reduced Latin square (first row and first column in
    /// natural order) in lexicographic cell order. The visitor receives
    /// the square and the enumeration nodes spent so far, and returns
    /// false to stop early.
    fn run(&mut self, visit: &mut dyn FnMut(&[u16], u64) -> bool) {
        let d = self.d;
        for k in 0..d {
            self.cells[k] = k as u16;
            self.row_used[0][k] = true;
            self.col_used[k][k] = true;
        }
        self.walk(d, visit);
    }

    fn walk(&mut self, pos: usize, visit: &mut dyn FnMut(&[u16], u64) -> bool) -> bool {
        let d = self.d;
        if pos == d * d {
            return visit(&self.cells, self.nodes);
        }
        let (row, col) = (pos / d, pos % d);
        let candidates = if col == 0 {
            row as u16..row as u16 + 1
        } else {
            0..d as u16
        };
        for v in candidates {
            self.nodes += 1;
            if self.nodes > self.budget {
                self.out_of_budget = true;
                return false;
            }
            let label = usize::from(v);
            if self.row_used[row][label] || self.col_used[col][label] {
                continue;
            }
            self.row_used[row][label] = true;
            self.col_used[col][label] = true;
            self.cells[pos] = v;
            let keep_going = self.walk(pos + 1, visit);
            self.row_used[row][label] = false;
            self.col_used[col][label] = false;
            if !keep_going {
                return false;
            }
        }
        true
    }
}

/// All reduced Latin squares of order d (first row and column in natural
/// order), row-major, in lexicographic order.
pub fn reduced_squares(d: usize, budget: u64) -> Result<Vec<Vec<u16>>> {
    check_search_dim(d)?;
    let mut squares = Vec::new();
    let mut enumerator = SquareEnumerator::new(d, budget);
    enumerator.run(&mut |cells, _| {
        squares.push(cells.to_vec());
        true
    });
    if enumerator.out_of_budget {
        return Err(Error::SearchBoundExceeded { dim: d, bound: SEARCH_DIM_BOUND });
    }
    Ok(squares)
}

/// Exhaustive variant organized square by square: walk every reduced Latin
/// square as the third striation and search each for a compatible fourth.
/// Any two orthogonal striations can be normalized to the row/column pair
/// and the next one to a reduced square, so a completed scan with no
/// partner found demonstrates that three is the maximum.
pub fn max_striations_all_squares(d: usize, budget: u64) -> Result<SearchResult> {
    check_search_dim(d)?;
    let base = PartialDesign::with_columns(d, vec![row_striation(d), column_striation(d)])?;
    let mut nodes_total = 0u64;
    let mut squares_scanned = 0u64;
    let mut first_square: Option<Vec<u16>> = None;
    let mut extended: Option<PartialDesign> = None;
    let mut mate_budget_hit = false;
    let mut enumerator = SquareEnumerator::new(d, budget);
    enumerator.run(&mut |cells, enumeration_nodes| {
        squares_scanned += 1;
        if first_square.is_none() {
            first_square = Some(cells.to_vec());
        }
        let pd = base
            .extended_with(cells.to_vec())
            .expect("a reduced Latin square is orthogonal to the coordinate pair");
        let remaining = budget.saturating_sub(nodes_total + enumeration_nodes);
        match extend(&pd, remaining) {
            ExtendOutcome::Extended { column, nodes } => {
                nodes_total += nodes;
                extended = Some(pd.extended_with(column).expect("search output is valid"));
                false
            }
            ExtendOutcome::ExhaustedNoExtension { nodes } => {
                nodes_total += nodes;
                if squares_scanned % 1000 == 0 {
                    eprintln!(
                        "search d={d}: {squares_scanned} squares scanned, no partner yet ({nodes_total} extension nodes)"
                    );
                }
                true
            }
            ExtendOutcome::BudgetExceeded { nodes } => {
                nodes_total += nodes;
                mate_budget_hit = true;
                false
            }
        }
    });
    nodes_total += enumerator.nodes;

    if let Some(pd) = extended {
        // A fourth striation exists; push on to the maximum from there.
        let mut tree = TreeSearch::new(d, pd.columns().to_vec(), budget.saturating_sub(nodes_total));
        let flow = tree.column_level();
        nodes_total += tree.nodes;
        let design = PartialDesign::with_columns(d, tree.best)?;
        let proven = design.len() == d + 1 || !matches!(flow, Flow::OutOfBudget);
        return Ok(SearchResult {
            d,
            count: design.len(),
            design,
            proven,
            nodes: nodes_total,
            bruck_ryser_excluded: bruck_ryser_excluded(d),
            squares_scanned: Some(squares_scanned),
        });
    }

    let budget_hit = mate_budget_hit || enumerator.out_of_budget;
    let design = match first_square {
        Some(square) => base.extended_with(square)?,
        None => base,
    };
    Ok(SearchResult {
        d,
        count: design.len(),
        design,
        proven: !budget_hit,
        nodes: nodes_total,
        bruck_ryser_excluded: bruck_ryser_excluded(d),
        squares_scanned: Some(squares_scanned),
    })
}

/// Witness describing the searched maximum, for report embedding.
pub fn describe(result: &SearchResult) -> Witness {
    Witness::new(
        &[("count", result.count as u64), ("nodes", result.nodes)],
        if result.proven {
            "demonstrated maximum number of pairwise-orthogonal striations"
        } else {
            "largest set found within budget (not demonstrated maximal)"
        },
    )
    .with_values(result.count as f64, (result.d + 1) as f64)
}
