//! Expression trees for symbolic regression.
//!
//! An [`Expression`] stores its nodes as a preorder sequence together with
//! one starting value per fitting-parameter slot. Expressions are immutable
//! values: genetic operators and parameter updates produce new expressions.
//!
//! The infix text format used by [`Expression::parse`] and the `Display`
//! impl is:
//!
//! * binary operators `+ - * /` with standard precedence; printing always
//!   parenthesizes,
//! * functions `sq, sin, cos, exp, logabs, sqrtabs` and `powabs(a, b)`,
//! * variables `x0, x1, ...`,
//! * fitting parameters as `<value>{p}`, e.g. `0.5{p}`,
//! * integer constants as bare nonzero integers.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

/// Binary operator kinds. `PowAbs` is `|a|^b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    PowAbs,
}

/// Unary operator kinds. The abs-guarded functions follow the usual
/// symbolic-regression convention: `LogAbs(v) = ln|v|`, `SqrtAbs(v) = sqrt|v|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Square,
    Sin,
    Cos,
    Exp,
    LogAbs,
    SqrtAbs,
}

/// A single tree node in preorder storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Binary(BinaryOp),
    Unary(UnaryOp),
    /// 0-based column index into the dataset.
    Variable(usize),
    /// 0-based slot into the expression's parameter vector.
    Parameter(usize),
    /// Nonzero integer constant. These arise from parsing or explicit
    /// construction only; the evolutionary terminal set does not contain them.
    IntConstant(i64),
}

impl Node {
    pub fn arity(&self) -> usize {
        match self {
            Node::Binary(_) => 2,
            Node::Unary(_) => 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("preorder sequence is not a single well-formed tree")]
    Malformed,
    #[error("parameter slots are not exactly 0..{expected}")]
    BadSlots { expected: usize },
    #[error("integer constant must be nonzero")]
    ZeroConstant,
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLen { got: usize, expected: usize },
}

/// Structural counts entering the function-complexity codelength: `k` nodes
/// counted (operators and variables; parameter and constant nodes excluded),
/// `n` distinct symbols among them (each variable index its own symbol), and
/// the values of all integer constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityCounts {
    pub k: usize,
    pub n: usize,
    pub constants: Vec<i64>,
}

/// An immutable expression tree plus parameter starting values.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    nodes: Vec<Node>,
    param_values: Vec<f64>,
}

impl Expression {
    /// Builds an expression from a preorder node sequence, validating that it
    /// forms exactly one tree, that parameter slots cover `0..p` without gaps,
    /// and that integer constants are nonzero.
    pub fn new(nodes: Vec<Node>, param_values: Vec<f64>) -> Result<Self, ExprError> {
        if !preorder_is_single_tree(&nodes) {
            return Err(ExprError::Malformed);
        }
        let p = param_values.len();
        let mut seen = vec![false; p];
        for node in &nodes {
            match *node {
                Node::Parameter(slot) => {
                    if slot >= p {
                        return Err(ExprError::BadSlots { expected: p });
                    }
                    seen[slot] = true;
                }
                Node::IntConstant(0) => return Err(ExprError::ZeroConstant),
                _ => {}
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(ExprError::BadSlots { expected: p });
        }
        Ok(Self {
            nodes,
            param_values,
        })
    }

    /// Single-node convenience constructors.
    pub fn variable(index: usize) -> Self {
        Self {
            nodes: vec![Node::Variable(index)],
            param_values: vec![],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Program length: total node count, parameters and constants included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parameter starting values in slot order.
    pub fn params(&self) -> &[f64] {
        &self.param_values
    }

    pub fn param_count(&self) -> usize {
        self.param_values.len()
    }

    /// Returns a structurally identical expression with replaced parameter
    /// values (the Lamarckian write-back after fitting).
    pub fn with_params(&self, values: Vec<f64>) -> Result<Self, ExprError> {
        if values.len() != self.param_values.len() {
            return Err(ExprError::ParamLen {
                got: values.len(),
                expected: self.param_values.len(),
            });
        }
        Ok(Self {
            nodes: self.nodes.clone(),
            param_values: values,
        })
    }

    /// Counts entering the function-complexity term. Operators and variables
    /// are counted in `k`; each operator kind and each distinct variable index
    /// is one symbol in `n`; parameter and constant nodes are excluded from
    /// both and constants are returned separately.
    pub fn complexity_counts(&self) -> ComplexityCounts {
        let mut k = 0usize;
        let mut symbols: Vec<Node> = Vec::new();
        let mut constants = Vec::new();
        for node in &self.nodes {
            match node {
                Node::Parameter(_) => {}
                Node::IntConstant(c) => constants.push(*c),
                other => {
                    k += 1;
                    if !symbols.contains(other) {
                        symbols.push(*other);
                    }
                }
            }
        }
        ComplexityCounts {
            k,
            n: symbols.len(),
            constants,
        }
    }

    /// Largest variable index used, if any.
    pub fn max_variable(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Variable(i) => Some(*i),
                _ => None,
            })
            .max()
    }

    /// Hash over the node sequence only; parameter values do not contribute.
    pub fn structure_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.nodes.hash(&mut h);
        h.finish()
    }

    /// Half-open node range of the subtree rooted at `root`.
    pub fn subtree_span(&self, root: usize) -> std::ops::Range<usize> {
        root..root + subtree_len(&self.nodes, root)
    }

    /// Parses the infix text format documented at module level.
    pub fn parse(input: &str) -> Result<Self, ParseError> {
        parse::parse(input)
    }
}

/// Number of nodes in the subtree rooted at `root` of a preorder sequence.
pub fn subtree_len(nodes: &[Node], root: usize) -> usize {
    let mut open = 1usize;
    let mut i = root;
    while open > 0 {
        open = open + nodes[i].arity() - 1;
        i += 1;
    }
    i - root
}

fn preorder_is_single_tree(nodes: &[Node]) -> bool {
    if nodes.is_empty() {
        return false;
    }
    let mut open = 1usize;
    for (i, node) in nodes.iter().enumerate() {
        if open == 0 {
            return false; // leftover nodes after the tree closed
        }
        open = open + node.arity() - 1;
        if open == 0 && i + 1 != nodes.len() {
            return false;
        }
    }
    open == 0
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn rec(
            nodes: &[Node],
            params: &[f64],
            idx: &mut usize,
            f: &mut fmt::Formatter<'_>,
        ) -> fmt::Result {
            let node = nodes[*idx];
            *idx += 1;
            match node {
                Node::Binary(op) => match op {
                    BinaryOp::PowAbs => {
                        write!(f, "powabs(")?;
                        rec(nodes, params, idx, f)?;
                        write!(f, ", ")?;
                        rec(nodes, params, idx, f)?;
                        write!(f, ")")
                    }
                    _ => {
                        let sym = match op {
                            BinaryOp::Add => "+",
                            BinaryOp::Sub => "-",
                            BinaryOp::Mul => "*",
                            BinaryOp::Div => "/",
                            BinaryOp::PowAbs => unreachable!(),
                        };
                        write!(f, "(")?;
                        rec(nodes, params, idx, f)?;
                        write!(f, " {sym} ")?;
                        rec(nodes, params, idx, f)?;
                        write!(f, ")")
                    }
                },
                Node::Unary(op) => {
                    let name = match op {
                        UnaryOp::Square => "sq",
                        UnaryOp::Sin => "sin",
                        UnaryOp::Cos => "cos",
                        UnaryOp::Exp => "exp",
                        UnaryOp::LogAbs => "logabs",
                        UnaryOp::SqrtAbs => "sqrtabs",
                    };
                    write!(f, "{name}(")?;
                    rec(nodes, params, idx, f)?;
                    write!(f, ")")
                }
                Node::Variable(i) => write!(f, "x{i}"),
                // {:?} prints the shortest digit string that round-trips,
                // which preserves values exactly through parse∘print.
                Node::Parameter(slot) => write!(f, "{:?}{{p}}", params[slot]),
                Node::IntConstant(c) => write!(f, "{c}"),
            }
        }
        let mut idx = 0;
        rec(&self.nodes, &self.param_values, &mut idx, f)
    }
}

pub use parse::ParseError;

mod parse {
    use super::{BinaryOp, Expression, Node, UnaryOp};
    use thiserror::Error;

    #[derive(Debug, Error, PartialEq)]
    #[error("{kind} at position {pos}")]
    pub struct ParseError {
        pub pos: usize,
        pub kind: ParseErrorKind,
    }

    #[derive(Debug, Error, PartialEq)]
    pub enum ParseErrorKind {
        #[error("syntax error: {0}")]
        Syntax(String),
        #[error("unknown symbol `{0}`")]
        UnknownSymbol(String),
        #[error("`{name}` takes {expected} argument(s)")]
        Arity { name: String, expected: usize },
        #[error("invalid number `{0}`")]
        BadNumber(String),
        #[error("integer constant must be nonzero")]
        ZeroConstant,
        #[error("non-integer constant `{0}` must be a parameter (append `{{p}}`)")]
        BareFloat(String),
    }

    #[derive(Debug, Clone, PartialEq)]
    enum Tok {
        Num { text: String, is_int: bool },
        Ident(String),
        ParamTag,
        LParen,
        RParen,
        Comma,
        Plus,
        Minus,
        Star,
        Slash,
    }

    fn lex(input: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let bytes = input.as_bytes();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '(' => {
                    toks.push((i, Tok::LParen));
                    i += 1;
                }
                ')' => {
                    toks.push((i, Tok::RParen));
                    i += 1;
                }
                ',' => {
                    toks.push((i, Tok::Comma));
                    i += 1;
                }
                '+' => {
                    toks.push((i, Tok::Plus));
                    i += 1;
                }
                '-' => {
                    toks.push((i, Tok::Minus));
                    i += 1;
                }
                '*' => {
                    toks.push((i, Tok::Star));
                    i += 1;
                }
                '/' => {
                    toks.push((i, Tok::Slash));
                    i += 1;
                }
                '{' => {
                    if input[i..].starts_with("{p}") {
                        toks.push((i, Tok::ParamTag));
                        i += 3;
                    } else {
                        return Err(ParseError {
                            pos: i,
                            kind: ParseErrorKind::Syntax("expected `{p}`".into()),
                        });
                    }
                }
                '0'..='9' | '.' => {
                    let start = i;
                    let mut is_int = true;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i < bytes.len() && bytes[i] == b'.' {
                        is_int = false;
                        i += 1;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                        is_int = false;
                        i += 1;
                        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                            i += 1;
                        }
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                    toks.push((
                        start,
                        Tok::Num {
                            text: input[start..i].to_string(),
                            is_int,
                        },
                    ));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len()
                        && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    toks.push((start, Tok::Ident(input[start..i].to_string())));
                }
                other => {
                    return Err(ParseError {
                        pos: i,
                        kind: ParseErrorKind::Syntax(format!("unexpected character `{other}`")),
                    });
                }
            }
        }
        Ok(toks)
    }

    // Recursive tree built during parsing; flattened to preorder afterwards
    // so parameter slots are numbered in preorder, not scan order.
    enum Ast {
        Bin(BinaryOp, Box<Ast>, Box<Ast>),
        Un(UnaryOp, Box<Ast>),
        Var(usize),
        Param(f64),
        Int(i64),
    }

    struct Parser {
        toks: Vec<(usize, Tok)>,
        pos: usize,
        input_len: usize,
    }

    impl Parser {
        fn peek(&self) -> Option<&Tok> {
            self.toks.get(self.pos).map(|(_, t)| t)
        }

        fn here(&self) -> usize {
            self.toks
                .get(self.pos)
                .map(|(p, _)| *p)
                .unwrap_or(self.input_len)
        }

        fn bump(&mut self) -> Option<Tok> {
            let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
            self.pos += 1;
            t
        }

        fn err(&self, kind: ParseErrorKind) -> ParseError {
            ParseError {
                pos: self.here(),
                kind,
            }
        }

        fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
            if self.peek() == Some(&tok) {
                self.pos += 1;
                Ok(())
            } else {
                Err(self.err(ParseErrorKind::Syntax(format!("expected {what}"))))
            }
        }

        fn expr(&mut self) -> Result<Ast, ParseError> {
            let mut left = self.term()?;
            loop {
                let op = match self.peek() {
                    Some(Tok::Plus) => BinaryOp::Add,
                    Some(Tok::Minus) => BinaryOp::Sub,
                    _ => break,
                };
                self.pos += 1;
                let right = self.term()?;
                left = Ast::Bin(op, Box::new(left), Box::new(right));
            }
            Ok(left)
        }

        fn term(&mut self) -> Result<Ast, ParseError> {
            let mut left = self.factor()?;
            loop {
                let op = match self.peek() {
                    Some(Tok::Star) => BinaryOp::Mul,
                    Some(Tok::Slash) => BinaryOp::Div,
                    _ => break,
                };
                self.pos += 1;
                let right = self.factor()?;
                left = Ast::Bin(op, Box::new(left), Box::new(right));
            }
            Ok(left)
        }

        fn factor(&mut self) -> Result<Ast, ParseError> {
            match self.bump() {
                Some(Tok::LParen) => {
                    let inner = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(inner)
                }
                Some(Tok::Minus) => match self.bump() {
                    Some(Tok::Num { text, is_int }) => self.literal(&format!("-{text}"), is_int),
                    _ => Err(self.err(ParseErrorKind::Syntax(
                        "`-` is only allowed in front of a literal".into(),
                    ))),
                },
                Some(Tok::Num { text, is_int }) => self.literal(&text, is_int),
                Some(Tok::Ident(name)) => self.ident(name),
                _ => Err(self.err(ParseErrorKind::Syntax("expected an operand".into()))),
            }
        }

        fn literal(&mut self, text: &str, is_int: bool) -> Result<Ast, ParseError> {
            let tagged = self.peek() == Some(&Tok::ParamTag);
            if tagged {
                self.pos += 1;
                let value: f64 = text
                    .parse()
                    .map_err(|_| self.err(ParseErrorKind::BadNumber(text.to_string())))?;
                return Ok(Ast::Param(value));
            }
            if is_int {
                let value: i64 = text
                    .parse()
                    .map_err(|_| self.err(ParseErrorKind::BadNumber(text.to_string())))?;
                if value == 0 {
                    return Err(self.err(ParseErrorKind::ZeroConstant));
                }
                Ok(Ast::Int(value))
            } else {
                Err(self.err(ParseErrorKind::BareFloat(text.to_string())))
            }
        }

        fn ident(&mut self, name: String) -> Result<Ast, ParseError> {
            if let Some(rest) = name.strip_prefix('x') {
                if let Ok(index) = rest.parse::<usize>() {
                    return Ok(Ast::Var(index));
                }
            }
            let unary = match name.as_str() {
                "sq" => Some(UnaryOp::Square),
                "sin" => Some(UnaryOp::Sin),
                "cos" => Some(UnaryOp::Cos),
                "exp" => Some(UnaryOp::Exp),
                "logabs" => Some(UnaryOp::LogAbs),
                "sqrtabs" => Some(UnaryOp::SqrtAbs),
                _ => None,
            };
            if unary.is_some() || name == "powabs" {
                self.expect(Tok::LParen, "`(`")?;
                let first = self.expr()?;
                if let Some(op) = unary {
                    if self.peek() == Some(&Tok::Comma) {
                        return Err(self.err(ParseErrorKind::Arity { name, expected: 1 }));
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Ast::Un(op, Box::new(first)));
                }
                if self.peek() != Some(&Tok::Comma) {
                    return Err(self.err(ParseErrorKind::Arity { name, expected: 2 }));
                }
                self.pos += 1;
                let second = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(Ast::Bin(
                    BinaryOp::PowAbs,
                    Box::new(first),
                    Box::new(second),
                ));
            }
            Err(self.err(ParseErrorKind::UnknownSymbol(name)))
        }
    }

    fn flatten(ast: &Ast, nodes: &mut Vec<Node>, params: &mut Vec<f64>) {
        match ast {
            Ast::Bin(op, a, b) => {
                nodes.push(Node::Binary(*op));
                flatten(a, nodes, params);
                flatten(b, nodes, params);
            }
            Ast::Un(op, a) => {
                nodes.push(Node::Unary(*op));
                flatten(a, nodes, params);
            }
            Ast::Var(i) => nodes.push(Node::Variable(*i)),
            Ast::Param(v) => {
                nodes.push(Node::Parameter(params.len()));
                params.push(*v);
            }
            Ast::Int(c) => nodes.push(Node::IntConstant(*c)),
        }
    }

    pub fn parse(input: &str) -> Result<Expression, ParseError> {
        let toks = lex(input)?;
        let mut parser = Parser {
            toks,
            pos: 0,
            input_len: input.len(),
        };
        let ast = parser.expr()?;
        if parser.pos != parser.toks.len() {
            return Err(parser.err(ParseErrorKind::Syntax("trailing input".into())));
        }
        let mut nodes = Vec::new();
        let mut params = Vec::new();
        flatten(&ast, &mut nodes, &mut params);
        Expression::new(nodes, params).map_err(|e| ParseError {
            pos: 0,
            kind: ParseErrorKind::Syntax(e.to_string()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// (m·v·v)/2 with m=x0 and v=x1, preorder: / × x0 × x1 x1 2
    fn kinetic() -> Expression {
        Expression::new(
            vec![
                Node::Binary(BinaryOp::Div),
                Node::Binary(BinaryOp::Mul),
                Node::Variable(0),
                Node::Binary(BinaryOp::Mul),
                Node::Variable(1),
                Node::Variable(1),
                Node::IntConstant(2),
            ],
            vec![],
        )
        .unwrap()
    }

    fn param_times_var(value: f64) -> Expression {
        Expression::new(
            vec![
                Node::Binary(BinaryOp::Mul),
                Node::Parameter(0),
                Node::Variable(0),
            ],
            vec![value],
        )
        .unwrap()
    }

    #[test]
    fn program_length_counts_every_node() {
        assert_eq!(Expression::variable(0).len(), 1);
        assert_eq!(kinetic().len(), 7);
        assert_eq!(param_times_var(0.5).len(), 3);
    }

    #[test]
    fn complexity_counts_exclude_params_and_constants() {
        let c = kinetic().complexity_counts();
        assert_eq!((c.k, c.n), (6, 4));
        assert_eq!(c.constants, vec![2]);

        let c = Expression::variable(0).complexity_counts();
        assert_eq!((c.k, c.n), (1, 1));
        assert!(c.constants.is_empty());

        let c = param_times_var(0.5).complexity_counts();
        assert_eq!((c.k, c.n), (2, 2));
        assert!(c.constants.is_empty());
    }

    #[test]
    fn counts_plus_params_plus_constants_equals_length() {
        for expr in [kinetic(), param_times_var(1.0), Expression::variable(3)] {
            let c = expr.complexity_counts();
            let n_params = expr
                .nodes()
                .iter()
                .filter(|n| matches!(n, Node::Parameter(_)))
                .count();
            assert_eq!(c.k + n_params + c.constants.len(), expr.len());
        }
    }

    #[test]
    fn extract_params_in_slot_order() {
        assert!(Expression::variable(0).params().is_empty());
        assert_eq!(param_times_var(0.5).params(), &[0.5]);
        let e = Expression::new(
            vec![
                Node::Binary(BinaryOp::Add),
                Node::Parameter(0),
                Node::Parameter(1),
            ],
            vec![1.5, -2.0],
        )
        .unwrap();
        assert_eq!(e.params(), &[1.5, -2.0]);
    }

    #[test]
    fn update_params_round_trips_and_preserves_structure() {
        let e = param_times_var(0.5);
        let updated = e.with_params(vec![3.25]).unwrap();
        assert_eq!(updated.params(), &[3.25]);
        assert_eq!(updated.structure_hash(), e.structure_hash());

        let none = Expression::variable(0);
        assert_eq!(none.with_params(vec![]).unwrap(), none);

        assert_eq!(
            e.with_params(vec![1.0, 2.0]),
            Err(ExprError::ParamLen {
                got: 2,
                expected: 1
            })
        );
    }

    #[test]
    fn rejects_malformed_trees() {
        assert!(Expression::new(vec![Node::Binary(BinaryOp::Add)], vec![]).is_err());
        assert!(Expression::new(
            vec![Node::Variable(0), Node::Variable(1)], // leftover node
            vec![]
        )
        .is_err());
        assert!(Expression::new(vec![Node::Parameter(1)], vec![0.0]).is_err());
        assert!(Expression::new(vec![Node::IntConstant(0)], vec![]).is_err());
    }

    #[test]
    fn prints_documented_format() {
        assert_eq!(param_times_var(0.5).to_string(), "(0.5{p} * x0)");
        assert_eq!(kinetic().to_string(), "((x0 * (x1 * x1)) / 2)");
        let pow = Expression::new(
            vec![
                Node::Binary(BinaryOp::PowAbs),
                Node::Variable(0),
                Node::IntConstant(3),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(pow.to_string(), "powabs(x0, 3)");
    }

    #[test]
    fn parses_functions_and_variables() {
        let e = Expression::parse("sin(x1)").unwrap();
        assert_eq!(
            e.nodes(),
            &[Node::Unary(UnaryOp::Sin), Node::Variable(1)]
        );

        let e = Expression::parse("(0.5{p} * x0)").unwrap();
        assert_eq!(e, param_times_var(0.5));

        let e = Expression::parse("x0 + 2 * x1").unwrap();
        assert_eq!(e.to_string(), "(x0 + (2 * x1))"); // precedence respected
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = Expression::parse("(x0 +").unwrap_err();
        assert_eq!(err.pos, 5);

        assert!(Expression::parse("foo(x0)").is_err());
        assert!(Expression::parse("sin(x0, x1)").is_err());
        assert!(Expression::parse("powabs(x0)").is_err());
        assert!(Expression::parse("1.5 + x0").is_err()); // bare float
        assert!(Expression::parse("x0 + 0").is_err()); // zero constant
    }

    #[test]
    fn parse_print_round_trip_preserves_values() {
        let e = Expression::new(
            vec![
                Node::Binary(BinaryOp::Add),
                Node::Binary(BinaryOp::Mul),
                Node::Parameter(0),
                Node::Variable(0),
                Node::Unary(UnaryOp::Exp),
                Node::Parameter(1),
            ],
            vec![0.1234567890123456, -2.5e-7],
        )
        .unwrap();
        let back = Expression::parse(&e.to_string()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn negative_literals_round_trip() {
        let e = Expression::new(
            vec![
                Node::Binary(BinaryOp::Mul),
                Node::IntConstant(-3),
                Node::Parameter(0),
            ],
            vec![-1.75],
        )
        .unwrap();
        assert_eq!(e.to_string(), "(-3 * -1.75{p})");
        assert_eq!(Expression::parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn subtree_spans() {
        let e = kinetic();
        assert_eq!(e.subtree_span(0), 0..7);
        assert_eq!(e.subtree_span(1), 1..6);
        assert_eq!(e.subtree_span(3), 3..6);
        assert_eq!(e.subtree_span(6), 6..7);
    }
}
