//! Mixed Nash equilibria of bimatrix games as variational inequalities.
//!
//! With payoffs `A, B` (player 1 picks rows, player 2 picks columns, both
//! maximize), the equilibrium condition is the VI with `F(x) = M x` over
//! `Delta_1 x Delta_2`, where `M = [[0, -A], [-B^T, 0]]`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{Mapping, ProblemMeta, SolutionSet, VIProblem};
use crate::set::{FeasibleSet, SimplexProduct};

#[derive(Debug, Clone, PartialEq)]
pub struct BimatrixGame {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl BimatrixGame {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.shape() != b.shape() {
            return Err(Error::Validation(format!(
                "payoff shapes differ: A is {:?}, B is {:?}",
                a.shape(),
                b.shape()
            )));
        }
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Validation("payoff matrices must be nonempty".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("payoffs must be finite".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Numbers of pure strategies `(n1, n2)`.
    pub fn sizes(&self) -> (usize, usize) {
        self.a.shape()
    }

    pub fn operator(&self) -> DMatrix<f64> {
        let (n1, n2) = self.sizes();
        let mut m = DMatrix::zeros(n1 + n2, n1 + n2);
        m.view_mut((0, n1), (n1, n2)).copy_from(&(-&self.a));
        m.view_mut((n1, 0), (n2, n1)).copy_from(&(-self.b.transpose()));
        m
    }

    /// Parses `A n1 n2` followed by `n1` rows, then `B n1 n2` and its rows.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let a = parse_block(&mut lines, "A", None)?;
        let b = parse_block(&mut lines, "B", Some(a.shape()))?;
        if let Some((line, _)) = lines.next() {
            return Err(Error::Parse {
                line,
                message: "unexpected content after the B block".into(),
            });
        }
        Self::new(a, b)
    }

    pub fn to_text(&self) -> String {
        let (n1, n2) = self.sizes();
        let mut out = String::new();
        for (tag, m) in [("A", &self.a), ("B", &self.b)] {
            let _ = writeln!(out, "{tag} {n1} {n2}");
            for row in m.row_iter() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
        }
        out
    }
}

fn parse_block<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    tag: &str,
    expected: Option<(usize, usize)>,
) -> Result<DMatrix<f64>> {
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        message: format!("missing `{tag}` block"),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_err = |message: String| Error::Parse { line, message };
    if fields.len() != 3 || fields[0] != tag {
        return Err(parse_err(format!("expected `{tag} n1 n2`, found `{header}`")));
    }
    let n1: usize = fields[1].parse().map_err(|_| parse_err(format!("bad row count `{}`", fields[1])))?;
    let n2: usize = fields[2].parse().map_err(|_| parse_err(format!("bad column count `{}`", fields[2])))?;
    if let Some(shape) = expected {
        if shape != (n1, n2) {
            return Err(parse_err(format!("{tag} is {n1}x{n2} but A is {}x{}", shape.0, shape.1)));
        }
    }
    let mut values = Vec::with_capacity(n1 * n2);
    for _ in 0..n1 {
        let (line, row) = lines.next().ok_or(Error::Parse {
            line,
            message: format!("{tag} block ends early"),
        })?;
        let cells = row
            .split_whitespace()
            .map(|c| {
                c.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad number `{c}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if cells.len() != n2 {
            return Err(Error::Parse {
                line,
                message: format!("expected {n2} entries, found {}", cells.len()),
            });
        }
        values.extend(cells);
    }
    Ok(DMatrix::from_row_slice(n1, n2, &values))
}

/// The VI of `game` over the product of the two strategy simplices.
pub fn make_bimatrix(game: &BimatrixGame) -> VIProblem {
    let (n1, n2) = game.sizes();
    let mapping = Mapping::linear(game.operator()).expect("square operator");
    let set = SimplexProduct::from_sizes(&[(n1, 1.0), (n2, 1.0)]).expect("nonempty blocks");
    VIProblem::new(format!("bimatrix-{n1}x{n2}"), mapping, FeasibleSet::SimplexProduct(set))
        .expect("dimensions agree")
        .with_meta(ProblemMeta {
            recommended_lambda: Some(0.5),
            ..ProblemMeta::default()
        })
}

/// Textbook 3x2 game with unique equilibrium `(0, 1/3, 2/3, 1/3, 2/3)`.
pub fn textbook_game() -> BimatrixGame {
    BimatrixGame::new(
        DMatrix::from_row_slice(3, 2, &[3.0, 3.0, 2.0, 5.0, 0.0, 6.0]),
        DMatrix::from_row_slice(3, 2, &[3.0, 2.0, 2.0, 6.0, 3.0, 1.0]),
    )
    .expect("valid game")
}

pub fn bimatrix_textbook() -> VIProblem {
    let x_star = DVector::from_column_slice(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
    make_bimatrix(&textbook_game())
        .with_solutions(SolutionSet::points([x_star]))
        .expect("textbook equilibrium")
        .renamed("bimatrix_textbook")
}

/// Integer payoffs drawn uniformly from `{0, ..., max_entry}`.
pub fn generate_random_bimatrix(n1: usize, n2: usize, max_entry: u32, seed: u64) -> Result<BimatrixGame> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::BadParameters("game sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows, cols| DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0..=max_entry) as f64);
    let a = draw(n1, n2);
    let b = draw(n1, n2);
    BimatrixGame::new(a, b)
}

/// The `(n1, n2, max_entry)` grid used by the benchmark.
pub const BENCH_GRID: [(usize, usize, u32); 6] =
    [(3, 2, 10), (6, 4, 30), (9, 6, 50), (12, 8, 70), (15, 10, 90), (18, 12, 110)];

/// Seeded benchmark games named `test-n1-n2-max`.
pub fn bench_grid(seed: u64) -> Vec<(String, BimatrixGame)> {
    BENCH_GRID
        .iter()
        .enumerate()
        .map(|(i, &(n1, n2, max_entry))| {
            let game = generate_random_bimatrix(n1, n2, max_entry, seed.wrapping_add(i as u64)).expect("positive sizes");
            (format!("test-{n1}-{n2}-{max_entry}"), game)
        })
        .collect()
}
