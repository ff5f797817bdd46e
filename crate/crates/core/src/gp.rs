//! The evolutionary search engine.
//!
//! Three variants share one generational skeleton: the multi-objective runs
//! (NLL/length and NLL/complexity) use nondominated sorting with crowding and
//! merge-then-truncate elitism; the single-objective run uses generational
//! replacement with one elite and a model-selection criterion as fitness.
//! Parameter fitting is memetic: every evaluation runs a short
//! Levenberg-Marquardt and writes the optimized values back into the
//! individual, so offspring inherit tuned parameters with their subtrees.
//!
//! Population evaluation is pure per individual and data-parallel; variation
//! and selection draw from a single sequential RNG stream, which makes runs
//! reproducible bit-for-bit regardless of thread count.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

use crate::criteria::{score_model, Criterion, CriterionScores};
use crate::data::Dataset;
use crate::eval;
use crate::expr::{BinaryOp, Expression, Node, UnaryOp};
use crate::fit::{fit_lm, FitConfig, FitResult};
use crate::nsga;
use crate::par;
use crate::rng::{rng_from_seed, SearchRng};

/// Function-set symbols available to the generator and mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpSymbol {
    Add,
    Sub,
    Mul,
    Div,
    PowAbs,
    Square,
    Sin,
    Cos,
    Exp,
    LogAbs,
    SqrtAbs,
}

impl OpSymbol {
    pub const ALL: [OpSymbol; 11] = [
        OpSymbol::Add,
        OpSymbol::Sub,
        OpSymbol::Mul,
        OpSymbol::Div,
        OpSymbol::PowAbs,
        OpSymbol::Square,
        OpSymbol::Sin,
        OpSymbol::Cos,
        OpSymbol::Exp,
        OpSymbol::LogAbs,
        OpSymbol::SqrtAbs,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OpSymbol::Add => "+",
            OpSymbol::Sub => "-",
            OpSymbol::Mul => "*",
            OpSymbol::Div => "/",
            OpSymbol::PowAbs => "powabs",
            OpSymbol::Square => "sq",
            OpSymbol::Sin => "sin",
            OpSymbol::Cos => "cos",
            OpSymbol::Exp => "exp",
            OpSymbol::LogAbs => "logabs",
            OpSymbol::SqrtAbs => "sqrtabs",
        }
    }

    pub fn from_name(name: &str) -> Option<OpSymbol> {
        OpSymbol::ALL.into_iter().find(|s| s.name() == name)
    }

    fn node(&self) -> Node {
        match self {
            OpSymbol::Add => Node::Binary(BinaryOp::Add),
            OpSymbol::Sub => Node::Binary(BinaryOp::Sub),
            OpSymbol::Mul => Node::Binary(BinaryOp::Mul),
            OpSymbol::Div => Node::Binary(BinaryOp::Div),
            OpSymbol::PowAbs => Node::Binary(BinaryOp::PowAbs),
            OpSymbol::Square => Node::Unary(UnaryOp::Square),
            OpSymbol::Sin => Node::Unary(UnaryOp::Sin),
            OpSymbol::Cos => Node::Unary(UnaryOp::Cos),
            OpSymbol::Exp => Node::Unary(UnaryOp::Exp),
            OpSymbol::LogAbs => Node::Unary(UnaryOp::LogAbs),
            OpSymbol::SqrtAbs => Node::Unary(UnaryOp::SqrtAbs),
        }
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            OpSymbol::Add | OpSymbol::Sub | OpSymbol::Mul | OpSymbol::Div | OpSymbol::PowAbs
        )
    }
}

/// Terminal-set symbols. `VarTimesParam` expands to the three-node subtree
/// `param * var` at creation; it is a generator convenience, not a node kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalSymbol {
    Var,
    Param,
    VarTimesParam,
}

impl TerminalSymbol {
    pub const ALL: [TerminalSymbol; 3] = [
        TerminalSymbol::Var,
        TerminalSymbol::Param,
        TerminalSymbol::VarTimesParam,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TerminalSymbol::Var => "var",
            TerminalSymbol::Param => "param",
            TerminalSymbol::VarTimesParam => "var*param",
        }
    }

    pub fn from_name(name: &str) -> Option<TerminalSymbol> {
        TerminalSymbol::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    MoLength,
    MoDl,
    So,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::MoLength => "mo-length",
            Variant::MoDl => "mo-dl",
            Variant::So => "so",
        }
    }

    pub fn from_name(name: &str) -> Option<Variant> {
        [Variant::MoLength, Variant::MoDl, Variant::So]
            .into_iter()
            .find(|v| v.name() == name)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("pop_size must be at least 2, got {0}")]
    PopSize(usize),
    #[error("max_len must be at least 3, got {0}")]
    MaxLen(usize),
    #[error("{name} must lie in [0, 1], got {value}")]
    Rate { name: &'static str, value: f64 },
    #[error("crossover_rate + mutation_individual_rate must equal 1 (offspring take exactly one branch), got {0}")]
    BranchRates(f64),
    #[error("tournament_size must be at least 1")]
    Tournament,
    #[error("grow_depth must be at least 1")]
    GrowDepth,
    #[error("function_set must not be empty")]
    EmptyFunctions,
    #[error("terminal_set must not be empty")]
    EmptyTerminals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pop_size: usize,
    pub max_gen: usize,
    pub max_len: usize,
    pub crossover_rate: f64,
    pub mutation_individual_rate: f64,
    pub mutation_node_rate: f64,
    pub tournament_size: usize,
    pub grow_depth: usize,
    pub function_set: Vec<OpSymbol>,
    pub terminal_set: Vec<TerminalSymbol>,
    pub variant: Variant,
    pub so_criterion: Criterion,
    pub seed: u64,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pop_size: 1000,
            max_gen: 200,
            max_len: 100,
            crossover_rate: 0.9,
            mutation_individual_rate: 0.1,
            mutation_node_rate: 0.05,
            tournament_size: 2,
            grow_depth: 5,
            function_set: OpSymbol::ALL.to_vec(),
            terminal_set: TerminalSymbol::ALL.to_vec(),
            variant: Variant::MoLength,
            so_criterion: Criterion::Dl,
            seed: 0,
            fit: FitConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.pop_size < 2 {
            return Err(ConfigError::PopSize(self.pop_size));
        }
        if self.max_len < 3 {
            return Err(ConfigError::MaxLen(self.max_len));
        }
        for (name, value) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_individual_rate", self.mutation_individual_rate),
            ("mutation_node_rate", self.mutation_node_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Rate { name, value });
            }
        }
        let branch = self.crossover_rate + self.mutation_individual_rate;
        if (branch - 1.0).abs() > 1e-9 {
            return Err(ConfigError::BranchRates(branch));
        }
        if self.tournament_size < 1 {
            return Err(ConfigError::Tournament);
        }
        if self.grow_depth < 1 {
            return Err(ConfigError::GrowDepth);
        }
        if self.function_set.is_empty() {
            return Err(ConfigError::EmptyFunctions);
        }
        if self.terminal_set.is_empty() {
            return Err(ConfigError::EmptyTerminals);
        }
        Ok(())
    }
}

/// One evaluated member of the population.
#[derive(Debug, Clone)]
pub struct Individual {
    pub expr: Expression,
    pub fit: FitResult,
    pub scores: CriterionScores,
    /// Two entries for the multi-objective variants, one for SO.
    pub objectives: Vec<f64>,
    pub rank: usize,
    pub crowding: f64,
}

/// Fits and scores a single expression (Lamarckian: the returned individual
/// carries the optimized parameter values).
pub fn evaluate_individual(expr: &Expression, train: &Dataset, cfg: &RunConfig) -> Individual {
    let fit = fit_lm(expr, expr.params(), train, &cfg.fit);
    let expr = expr
        .with_params(fit.theta.clone())
        .expect("fit preserves the parameter count");
    let scores = score_model(&expr, &fit, train);
    let objectives = objectives_for(&fit, &scores, expr.len(), cfg);
    Individual {
        expr,
        fit,
        scores,
        objectives,
        rank: 0,
        crowding: 0.0,
    }
}

fn objectives_for(
    fit: &FitResult,
    scores: &CriterionScores,
    length: usize,
    cfg: &RunConfig,
) -> Vec<f64> {
    let sane = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    if !fit.nll.is_finite() {
        return match cfg.variant {
            Variant::So => vec![f64::INFINITY],
            _ => vec![f64::INFINITY, f64::INFINITY],
        };
    }
    match cfg.variant {
        Variant::MoLength => vec![sane(fit.nll), length as f64],
        Variant::MoDl => vec![sane(fit.nll), sane(scores.func_comp + scores.param_comp)],
        Variant::So => vec![sane(scores.get(cfg.so_criterion))],
    }
}

/// Evaluates a batch of expressions (data-parallel when enabled).
pub fn evaluate_population(
    exprs: &[Expression],
    train: &Dataset,
    cfg: &RunConfig,
) -> Vec<Individual> {
    par::map(exprs, |e| evaluate_individual(e, train, cfg))
}

/// Always-sequential twin of [`evaluate_population`] for benchmarks.
pub fn evaluate_population_seq(
    exprs: &[Expression],
    train: &Dataset,
    cfg: &RunConfig,
) -> Vec<Individual> {
    par::map_seq(exprs, |e| evaluate_individual(e, train, cfg))
}

/// Grow-initialization of one expression: function symbols with probability
/// 1/2 while below the depth limit, terminals otherwise; trees longer than
/// `max_len` are regenerated.
pub fn random_expression(rng: &mut SearchRng, cfg: &RunConfig, n_vars: usize) -> Expression {
    loop {
        let mut nodes = Vec::new();
        let mut params = Vec::new();
        grow(rng, cfg, n_vars, 1, &mut nodes, &mut params);
        if nodes.len() <= cfg.max_len {
            return Expression::new(nodes, params).expect("grow emits well-formed trees");
        }
    }
}

fn grow(
    rng: &mut SearchRng,
    cfg: &RunConfig,
    n_vars: usize,
    depth: usize,
    nodes: &mut Vec<Node>,
    params: &mut Vec<f64>,
) {
    if depth < cfg.grow_depth && rng.gen_bool(0.5) {
        let op = cfg.function_set[rng.gen_range(0..cfg.function_set.len())];
        nodes.push(op.node());
        for _ in 0..op.node().arity() {
            grow(rng, cfg, n_vars, depth + 1, nodes, params);
        }
    } else {
        let terminal = cfg.terminal_set[rng.gen_range(0..cfg.terminal_set.len())];
        match terminal {
            TerminalSymbol::Var => nodes.push(Node::Variable(rng.gen_range(0..n_vars))),
            TerminalSymbol::Param => {
                nodes.push(Node::Parameter(params.len()));
                params.push(StandardNormal.sample(rng));
            }
            TerminalSymbol::VarTimesParam => {
                nodes.push(Node::Binary(BinaryOp::Mul));
                nodes.push(Node::Parameter(params.len()));
                params.push(StandardNormal.sample(rng));
                nodes.push(Node::Variable(rng.gen_range(0..n_vars)));
            }
        }
    }
}

pub fn init_population(rng: &mut SearchRng, cfg: &RunConfig, n_vars: usize) -> Vec<Expression> {
    (0..cfg.pop_size)
        .map(|_| random_expression(rng, cfg, n_vars))
        .collect()
}

fn better(a: &Individual, b: &Individual, variant: Variant) -> bool {
    match variant {
        Variant::So => a.objectives[0] < b.objectives[0],
        _ => a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding),
    }
}

/// Tournament selection: uniform sample with replacement, winner by rank and
/// crowding (multi-objective) or scalar fitness (single-objective).
pub fn tournament<'a>(
    rng: &mut SearchRng,
    pop: &'a [Individual],
    group_size: usize,
    variant: Variant,
) -> &'a Individual {
    let mut winner = &pop[rng.gen_range(0..pop.len())];
    for _ in 1..group_size {
        let challenger = &pop[rng.gen_range(0..pop.len())];
        if better(challenger, winner, variant) {
            winner = challenger;
        }
    }
    winner
}

/// Replaces a uniformly chosen subtree of `p1` with a uniformly chosen
/// subtree of `p2`. Parameter values travel with their subtrees; slots are
/// renumbered in preorder. Retries up to 10 times when the offspring would
/// exceed `max_len`, then falls back to a copy of `p1`.
pub fn subtree_crossover(
    rng: &mut SearchRng,
    p1: &Expression,
    p2: &Expression,
    max_len: usize,
) -> Expression {
    for _ in 0..10 {
        let a = rng.gen_range(0..p1.len());
        let b = rng.gen_range(0..p2.len());
        let a_span = p1.subtree_span(a);
        let b_span = p2.subtree_span(b);
        let new_len = p1.len() - a_span.len() + b_span.len();
        if new_len > max_len {
            continue;
        }
        let mut nodes = Vec::with_capacity(new_len);
        let mut params = Vec::new();
        let mut copy = |segment: &[Node], values: &[f64]| {
            for node in segment {
                match node {
                    Node::Parameter(slot) => {
                        nodes.push(Node::Parameter(params.len()));
                        params.push(values[*slot]);
                    }
                    other => nodes.push(*other),
                }
            }
        };
        copy(&p1.nodes()[..a_span.start], p1.params());
        copy(&p2.nodes()[b_span.clone()], p2.params());
        copy(&p1.nodes()[a_span.end..], p1.params());
        return Expression::new(nodes, params).expect("crossover preserves well-formedness");
    }
    p1.clone()
}

/// Point mutation: each node independently mutates with probability
/// `mutation_node_rate`. Operators are redrawn within the same arity,
/// variables get a fresh index, parameter values receive multiplicative
/// Normal(1, 0.1) jitter. The tree shape (and program length) never changes.
pub fn mutate(
    rng: &mut SearchRng,
    expr: &Expression,
    cfg: &RunConfig,
    n_vars: usize,
) -> Expression {
    let binaries: Vec<OpSymbol> = cfg
        .function_set
        .iter()
        .copied()
        .filter(|s| s.is_binary())
        .collect();
    let unaries: Vec<OpSymbol> = cfg
        .function_set
        .iter()
        .copied()
        .filter(|s| !s.is_binary())
        .collect();
    let jitter = Normal::new(1.0, 0.1).unwrap();

    let mut nodes = expr.nodes().to_vec();
    let mut params = expr.params().to_vec();
    for node in &mut nodes {
        if !rng.gen_bool(cfg.mutation_node_rate) {
            continue;
        }
        match node {
            Node::Binary(_) if !binaries.is_empty() => {
                *node = binaries[rng.gen_range(0..binaries.len())].node();
            }
            Node::Unary(_) if !unaries.is_empty() => {
                *node = unaries[rng.gen_range(0..unaries.len())].node();
            }
            Node::Variable(index) => *index = rng.gen_range(0..n_vars),
            Node::Parameter(slot) => params[*slot] *= jitter.sample(rng),
            _ => {}
        }
    }
    Expression::new(nodes, params).expect("point mutation preserves well-formedness")
}

fn make_offspring(
    rng: &mut SearchRng,
    pop: &[Individual],
    cfg: &RunConfig,
    n_vars: usize,
) -> Expression {
    let p1 = tournament(rng, pop, cfg.tournament_size, cfg.variant);
    if rng.gen_bool(cfg.crossover_rate) {
        let p2 = tournament(rng, pop, cfg.tournament_size, cfg.variant);
        subtree_crossover(rng, &p1.expr, &p2.expr, cfg.max_len)
    } else {
        mutate(rng, &p1.expr, cfg, n_vars)
    }
}

/// One row of the per-generation selection trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRecord {
    pub generation: usize,
    pub criterion: Criterion,
    pub expression: String,
    pub length: usize,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub test_r2: f64,
    pub nll: f64,
    pub aic: f64,
    pub bic: f64,
    pub bic_sr: f64,
    pub dl: f64,
    pub fbf: f64,
}

/// One member of the final first front (the final best for SO).
#[derive(Debug, Clone, PartialEq)]
pub struct FrontMember {
    pub expression: String,
    pub length: usize,
    pub nll: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub test_r2: f64,
    pub aic: f64,
    pub bic: f64,
    pub bic_sr: f64,
    pub dl: f64,
    pub fbf: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    pub selections: Vec<SelectionRecord>,
    pub front: Vec<FrontMember>,
}

/// RMSE and R² on a held-out set; R² is 1 − SSE/SST with SST centered on the
/// set's own mean and may be negative (or −inf for non-finite predictions).
pub fn test_metrics(expr: &Expression, theta: &[f64], test: &Dataset) -> (f64, f64) {
    let pred = eval::evaluate(expr, theta, &test.x);
    let m = test.rows() as f64;
    let mut sse = 0.0;
    for (f, y) in pred.iter().zip(&test.y) {
        let r = y - f;
        sse += r * r;
    }
    if !sse.is_finite() {
        return (f64::INFINITY, f64::NEG_INFINITY);
    }
    let mean = test.y.iter().sum::<f64>() / m;
    let sst: f64 = test.y.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r2 = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    ((sse / m).sqrt(), r2)
}

fn record_for(ind: &Individual, generation: usize, criterion: Criterion, test: &Dataset) -> SelectionRecord {
    let (test_rmse, test_r2) = test_metrics(&ind.expr, &ind.fit.theta, test);
    SelectionRecord {
        generation,
        criterion,
        expression: ind.expr.to_string(),
        length: ind.expr.len(),
        train_rmse: ind.fit.sigma2.sqrt(),
        test_rmse,
        test_r2,
        nll: ind.fit.nll,
        aic: ind.scores.aic,
        bic: ind.scores.bic,
        bic_sr: ind.scores.bic_sr,
        dl: ind.scores.dl,
        fbf: ind.scores.fbf,
    }
}

fn front_member(ind: &Individual, test: &Dataset) -> FrontMember {
    let (test_rmse, test_r2) = test_metrics(&ind.expr, &ind.fit.theta, test);
    FrontMember {
        expression: ind.expr.to_string(),
        length: ind.expr.len(),
        nll: ind.fit.nll,
        train_rmse: ind.fit.sigma2.sqrt(),
        test_rmse,
        test_r2,
        aic: ind.scores.aic,
        bic: ind.scores.bic,
        bic_sr: ind.scores.bic_sr,
        dl: ind.scores.dl,
        fbf: ind.scores.fbf,
    }
}

/// Criterion argmin over the first front with deterministic tie-breaking:
/// lowest value, then shortest, then lowest NLL.
pub fn select_by_criterion<'a>(front: &[&'a Individual], criterion: Criterion) -> &'a Individual {
    front
        .iter()
        .copied()
        .min_by(|a, b| {
            a.scores
                .get(criterion)
                .total_cmp(&b.scores.get(criterion))
                .then(a.expr.len().cmp(&b.expr.len()))
                .then(a.fit.nll.total_cmp(&b.fit.nll))
        })
        .expect("front is never empty")
}

fn assign_ranks(pop: &mut Vec<Individual>) {
    let objectives: Vec<Vec<f64>> = pop.iter().map(|i| i.objectives.clone()).collect();
    let sorted = nsga::non_dominated_sort(&objectives);
    for (i, ind) in pop.iter_mut().enumerate() {
        ind.rank = sorted.rank[i];
        ind.crowding = sorted.crowding[i];
    }
    let order = sorted.ordering();
    let mut taken: Vec<Option<Individual>> = pop.drain(..).map(Some).collect();
    *pop = order
        .into_iter()
        .map(|i| taken[i].take().expect("ordering is a permutation"))
        .collect();
}

fn record_front_selections(
    pop: &[Individual],
    generation: usize,
    test: &Dataset,
    out: &mut Vec<SelectionRecord>,
) {
    let front: Vec<&Individual> = pop.iter().filter(|i| i.rank == 1).collect();
    for criterion in Criterion::ALL {
        let chosen = select_by_criterion(&front, criterion);
        out.push(record_for(chosen, generation, criterion, test));
    }
}

fn run_mo(cfg: &RunConfig, train: &Dataset, test: &Dataset) -> RunTrace {
    let n_vars = train.dims();
    let mut rng = rng_from_seed(cfg.seed);
    let exprs = init_population(&mut rng, cfg, n_vars);
    let mut pop = evaluate_population(&exprs, train, cfg);
    assign_ranks(&mut pop);

    let mut trace = RunTrace::default();
    record_front_selections(&pop, 0, test, &mut trace.selections);

    for generation in 1..=cfg.max_gen {
        let offspring: Vec<Expression> = (0..cfg.pop_size)
            .map(|_| make_offspring(&mut rng, &pop, cfg, n_vars))
            .collect();
        let evaluated = evaluate_population(&offspring, train, cfg);
        pop.extend(evaluated);
        assign_ranks(&mut pop);
        pop.truncate(cfg.pop_size);
        record_front_selections(&pop, generation, test, &mut trace.selections);
    }

    trace.front = pop
        .iter()
        .filter(|i| i.rank == 1)
        .map(|i| front_member(i, test))
        .collect();
    trace
}

fn sort_so(pop: &mut [Individual]) {
    pop.sort_by(|a, b| a.objectives[0].total_cmp(&b.objectives[0]));
    for (i, ind) in pop.iter_mut().enumerate() {
        ind.rank = i + 1;
        ind.crowding = 0.0;
    }
}

fn run_so(cfg: &RunConfig, train: &Dataset, test: &Dataset) -> RunTrace {
    let n_vars = train.dims();
    let mut rng = rng_from_seed(cfg.seed);
    let exprs = init_population(&mut rng, cfg, n_vars);
    let mut pop = evaluate_population(&exprs, train, cfg);
    sort_so(&mut pop);
    let mut best = pop[0].clone();

    let mut trace = RunTrace::default();
    trace
        .selections
        .push(record_for(&best, 0, cfg.so_criterion, test));

    for generation in 1..=cfg.max_gen {
        let offspring: Vec<Expression> = (0..cfg.pop_size - 1)
            .map(|_| make_offspring(&mut rng, &pop, cfg, n_vars))
            .collect();
        let mut next = evaluate_population(&offspring, train, cfg);
        // The elite keeps its cached evaluation, so its fitness cannot drift.
        next.push(best.clone());
        sort_so(&mut next);
        pop = next;
        best = pop[0].clone();
        trace
            .selections
            .push(record_for(&best, generation, cfg.so_criterion, test));
    }

    trace.front = vec![front_member(&best, test)];
    trace
}

/// Runs the configured variant and returns the full per-generation trace
/// plus the final first front (final best for SO).
pub fn run(cfg: &RunConfig, train: &Dataset, test: &Dataset) -> RunTrace {
    debug_assert!(cfg.validate().is_ok());
    match cfg.variant {
        Variant::So => run_so(cfg, train, test),
        _ => run_mo(cfg, train, test),
    }
}
