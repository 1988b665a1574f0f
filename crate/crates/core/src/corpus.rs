//! Bundled reference algebras: small standards (Heisenberg, abelian, free
//! two-step), the 12-dimensional type-(2,10) algebra rejected by the
//! necessary conditions, catalog algebra 102 with its dual, and the 18
//! two-step algebras of types (3,5)/(4,5) without a nice basis together
//! with their printed orthonormal nilsoliton bases.

use crate::algebra::LieAlgebra;
use crate::mat::Mat;
use crate::pre_einstein::example_type_2_10;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: &'static str,
    pub summary: &'static str,
    pub algebra: LieAlgebra,
    /// Columns are the printed orthonormal-basis vectors of a nilsoliton
    /// inner product, when the catalog supplies one.
    pub soliton_frame: Option<Mat>,
    pub expected_nice: Option<bool>,
    pub expected_einstein: Option<bool>,
}

fn frame(n: usize, cols: Vec<Vec<(f64, usize)>>) -> Mat {
    assert_eq!(cols.len(), n, "frame must be square");
    let mut m = Mat::zeros(n, n);
    for (c, terms) in cols.iter().enumerate() {
        for &(coeff, idx) in terms {
            assert!(idx < n);
            m[(idx, c)] = coeff;
        }
    }
    m
}

fn parse(text: &str) -> LieAlgebra {
    LieAlgebra::parse_text(text).expect("corpus relations are valid")
}

/// The full corpus, in a stable order.
pub fn corpus() -> Vec<CorpusEntry> {
    let mut entries = vec![
        CorpusEntry {
            id: "h3",
            summary: "3-dimensional Heisenberg algebra",
            algebra: LieAlgebra::heisenberg(),
            soliton_frame: Some(Mat::identity(3)),
            expected_nice: Some(true),
            expected_einstein: Some(true),
        },
        CorpusEntry {
            id: "abelian2",
            summary: "abelian algebra of dimension 2",
            algebra: LieAlgebra::abelian(2),
            soliton_frame: Some(Mat::identity(2)),
            expected_nice: Some(true),
            expected_einstein: Some(true),
        },
        CorpusEntry {
            id: "abelian4",
            summary: "abelian algebra of dimension 4",
            algebra: LieAlgebra::abelian(4),
            soliton_frame: Some(Mat::identity(4)),
            expected_nice: Some(true),
            expected_einstein: Some(true),
        },
        CorpusEntry {
            id: "h3h3",
            summary: "direct sum of two Heisenberg algebras",
            algebra: parse("q=4 p=2; 121,342"),
            soliton_frame: Some(Mat::identity(6)),
            expected_nice: Some(true),
            expected_einstein: Some(true),
        },
        CorpusEntry {
            id: "f32",
            summary: "free two-step algebra on 3 generators",
            algebra: LieAlgebra::free_two_step(3),
            soliton_frame: None,
            expected_nice: Some(true),
            expected_einstein: Some(true),
        },
        CorpusEntry {
            id: "gt102",
            summary: "catalog algebra 102 of type (3,5): f(3,2) plus a 2-dimensional abelian ideal",
            algebra: parse("q=5 p=3; 121,132,233"),
            soliton_frame: None,
            expected_nice: Some(true),
            expected_einstein: Some(true),
        },
        CorpusEntry {
            id: "gt102dual",
            summary: "dual of catalog algebra 102, type (7,5)",
            algebra: parse("q=5 p=7; 141,152,243,254,345,356,457"),
            soliton_frame: None,
            expected_nice: Some(true),
            expected_einstein: Some(false),
        },
        CorpusEntry {
            id: "t210",
            summary: "12-dimensional two-step algebra of type (2,10) with positive \
                      pre-Einstein derivation but ad_phi eigenvalue -1/55",
            algebra: example_type_2_10(),
            soliton_frame: None,
            expected_nice: Some(true),
            expected_einstein: Some(false),
        },
    ];
    entries.extend(catalog_tables());
    entries
}

pub fn find(id: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| e.id == id)
}

/// The 18 catalog algebras with printed nilsoliton frames.
fn catalog_tables() -> Vec<CorpusEntry> {
    let s = f64::sqrt;
    let mut out = Vec::new();

    // Type (4,5): q = 5, X1..X5 are 0..4, Z1..Z4 are 5..8.
    let (x, z) = (|i: usize| i - 1, |a: usize| 4 + a);

    out.push(CorpusEntry {
        id: "gt26",
        summary: "catalog algebra 26, type (4,5)",
        algebra: parse("q=5 p=4; 133,152,233,244,251,341"),
        soliton_frame: Some(frame(
            9,
            vec![
                vec![(-2.0 / s(3.0), x(1)), (1.0 / s(3.0), x(2))],
                vec![(s(2.0) / s(3.0), x(2))],
                vec![(1.0, x(3))],
                vec![(1.0, x(4))],
                vec![(1.0, x(5))],
                vec![(1.0, z(3))],
                vec![(1.0, z(4))],
                vec![(-s(3.0) / s(10.0), z(1)), (-2.0 * s(3.0) / s(10.0), z(2))],
                vec![(s(3.0) / s(2.0), z(2))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt28",
        summary: "catalog algebra 28, type (4,5)",
        algebra: parse("q=5 p=4; 134,143,152,233,242,251,342"),
        soliton_frame: Some(frame(
            9,
            vec![
                vec![(2.0 * s(3.0), x(1))],
                vec![(-2.0, x(2)), (1.0, x(3))],
                vec![(s(6.0), x(3))],
                vec![(s(6.0), x(4))],
                vec![(1.0, x(5))],
                vec![(1.0, z(4))],
                vec![(1.0, z(3))],
                vec![(1.0 / s(2.0), z(2))],
                vec![(1.0 / s(30.0), z(1))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt44",
        summary: "catalog algebra 44, type (4,5)",
        algebra: parse("q=5 p=4; 124,143,152,232,242,351"),
        soliton_frame: Some(frame(
            9,
            vec![
                vec![(s(6.0), x(1))],
                vec![(s(6.0), x(2))],
                vec![(-2.0, x(3)), (1.0, x(4))],
                vec![(s(6.0), x(4))],
                vec![(1.0, x(5))],
                vec![(1.0, z(4))],
                vec![(1.0, z(3))],
                vec![(1.0, z(2))],
                vec![(1.0 / s(15.0), z(1))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt45",
        summary: "catalog algebra 45, type (4,5)",
        algebra: parse("q=5 p=4; 123,142,151,232,243,344"),
        soliton_frame: Some(frame(
            9,
            vec![
                vec![(2.0 / s(6.0), x(1)), (1.0 / s(6.0), x(4))],
                vec![(2.0, x(2))],
                vec![(1.0, x(3))],
                vec![(1.0, x(4))],
                vec![(s(5.0 / 2.0), x(5))],
                vec![(1.0, z(4))],
                vec![(2.0, z(3))],
                vec![(2.0, z(2))],
                vec![(1.0, z(1))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt55",
        summary: "catalog algebra 55, type (4,5)",
        algebra: parse("q=5 p=4; 124,132,142,243,351"),
        soliton_frame: Some(frame(
            9,
            vec![
                vec![(1.0, x(1))],
                vec![(1.0, x(2))],
                vec![(-2.0 / s(6.0), x(3)), (1.0 / s(6.0), x(4))],
                vec![(1.0, x(4))],
                vec![(1.0, x(5))],
                vec![(1.0, z(4))],
                vec![(1.0, z(3))],
                vec![(1.0, z(2))],
                vec![(s(2.0 / 5.0), z(1))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt60",
        summary: "catalog algebra 60, type (4,5)",
        algebra: parse("q=5 p=4; 124,132,143,232,251,341"),
        soliton_frame: Some(frame(
            9,
            vec![
                vec![(-2.0 / s(2.0), x(1)), (1.0 / s(2.0), x(2))],
                vec![(s(3.0 / 2.0), x(2))],
                vec![(1.0, x(3))],
                vec![(1.0, x(4))],
                vec![(1.0, x(5))],
                vec![(s(3.0), z(4))],
                vec![(1.0, z(3))],
                vec![(1.0, z(2))],
                vec![(1.0, z(1))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt66",
        summary: "catalog algebra 66, type (4,5)",
        algebra: parse("q=5 p=4; 124,131,153,231,242"),
        soliton_frame: Some(frame(
            9,
            vec![
                vec![(-2.0, x(1)), (1.0, x(2))],
                vec![(s(3.0), x(2))],
                vec![(1.0, x(3))],
                vec![(1.0, x(4))],
                vec![(1.0, x(5))],
                vec![(s(12.0), z(4))],
                vec![(1.0, z(3))],
                vec![(1.0, z(2))],
                vec![(1.0, z(1))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt72",
        summary: "catalog algebra 72, type (3,5)",
        algebra: parse("q=5 p=3; 132,143,232,251,341"),
        soliton_frame: Some(frame(
            8,
            vec![
                vec![(1.0, x(1)), (1.0, x(2))],
                vec![(s(3.0), x(1)), (-s(3.0), x(2))],
                vec![(1.0, x(3))],
                vec![(1.0, x(4))],
                vec![(1.0, x(5))],
                vec![(1.0, z(3))],
                vec![(1.0, z(1))],
                vec![(1.0, z(2))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt78",
        summary: "catalog algebra 78, type (3,5)",
        algebra: parse("q=5 p=3; 131,153,231,242"),
        soliton_frame: Some(frame(
            8,
            vec![
                vec![(1.0, x(1)), (1.0, x(2))],
                vec![(s(3.0), x(1)), (-s(3.0), x(2))],
                vec![(1.0, x(3))],
                vec![(1.0, x(4))],
                vec![(1.0, x(5))],
                vec![(1.0, z(1))],
                vec![(1.0, z(2))],
                vec![(1.0, z(3))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt26s",
        summary: "dual of catalog algebra 26, type (6,5)",
        algebra: parse("q=5 p=6; -251,341,-132,232,123,144,355,456"),
        soliton_frame: Some(frame(
            11,
            vec![
                vec![
                    (-26.0 * s(3.0) / s(91.0), x(1)),
                    (-19.0 * s(3.0) / s(91.0), x(2)),
                ],
                vec![(-3.0 * s(209.0) / s(91.0), x(2))],
                vec![(12.0 * s(19.0) / 7.0, x(3))],
                vec![(11.0 / 6.0, x(4))],
                vec![(s(22.0) / s(3.0), x(5))],
                vec![(1.0, z(1))],
                vec![(6.0 * s(6.0) / s(77.0), z(2))],
                vec![(1.0, z(3))],
                vec![(s(627.0) / (16.0 * s(14.0)), z(4))],
                vec![(1.0, z(5))],
                vec![(77.0 / (72.0 * s(19.0)), z(6))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt28s",
        summary: "dual of catalog algebra 28, type (6,5)",
        algebra: parse("q=5 p=6; 121,-153-154,232,-142,243,344,355,456"),
        soliton_frame: Some(frame(
            11,
            vec![
                vec![(8.0 * s(266.0) / s(5.0), x(1))],
                vec![(12.0 * s(57.0) / s(145.0), x(2))],
                vec![(9.0 / s(29.0), x(2)), (s(29.0), x(3))],
                vec![(1.0, x(4))],
                vec![(s(3.0) / (2.0 * s(14.0)), x(5))],
                vec![(16.0 * s(14.0) / 5.0, z(1))],
                vec![(4.0 * s(2.0) / s(5.0), z(2))],
                vec![(4.0 * s(6.0) / s(145.0), z(3))],
                vec![
                    (-9.0 / (19.0 * s(29.0)), z(3)),
                    (29.0 / (19.0 * s(29.0)), z(4)),
                ],
                vec![(s(3.0) / (10.0 * s(7.0)), z(5))],
                vec![(s(3.0) / (16.0 * s(266.0)), z(6))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt44s",
        summary: "dual of catalog algebra 44, type (6,5)",
        algebra: parse("q=5 p=6; 131,-152-153,232,243,254,345,456"),
        soliton_frame: Some(frame(
            11,
            vec![
                vec![(2.0 * s(199.0) / (3.0 * s(145.0)), x(1))],
                vec![(1.0 / s(29.0), x(2))],
                vec![
                    (s(2.0) / (3.0 * s(2805.0)), x(3)),
                    ((33.0 / 58.0) * s(2.0) / (3.0 * s(2805.0)), x(4)),
                ],
                vec![(1.0 / 29.0, x(4))],
                vec![(1.0 / s(5771.0), x(5))],
                vec![(1.0, z(6))],
                vec![(398.0 * s(2.0) / (3.0 * s(33.0)), z(1))],
                vec![(10.0 * s(34.0) / s(33.0), z(2))],
                vec![
                    (-154.0 * s(65.0) / 78.0, z(2)),
                    (-199.0 * s(65.0) / 78.0, z(3)),
                ],
                vec![(5.0 * s(17.0) / s(23.0), z(4))],
                vec![(2.0 * s(995.0) / s(1353.0), z(5))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt45s",
        summary: "dual of catalog algebra 45, type (6,5)",
        algebra: parse("q=5 p=6; -141,231,-122,242,133,254,355,456"),
        soliton_frame: Some(frame(
            11,
            vec![
                vec![(13.0, x(1)), (-8.0, x(4))],
                vec![(2.0 / 5.0, x(2))],
                vec![(260.0, x(3))],
                vec![(12.0, x(4))],
                vec![(1.0, x(5))],
                vec![(s(130.0), z(1))],
                vec![(1.0 / s(10.0), z(2))],
                vec![(65.0 * s(10.0), z(3))],
                vec![(1.0 / (10.0 * s(13.0)), z(4))],
                vec![(5.0 * s(13.0), z(5))],
                vec![(1.0, z(6))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt55s",
        summary: "dual of catalog algebra 55, type (6,5)",
        algebra: parse("q=5 p=6; -131,141,152,233,254,345,456"),
        soliton_frame: Some(frame(
            11,
            vec![
                vec![(1.0, x(1))],
                vec![(1.0, x(2))],
                vec![(17.0 / (2.0 * s(6.0)), x(3)), (s(6.0), x(4))],
                vec![(s(11.0), x(4))],
                vec![(1.0, x(5))],
                vec![(s(34.0) / (2.0 * s(3.0)), z(1))],
                vec![(s(5.0) / s(7.0), z(2))],
                vec![(s(34.0) / (2.0 * s(3.0)), z(3))],
                vec![(s(5.0) / s(7.0), z(4))],
                vec![(17.0 * s(55.0) / (2.0 * s(39.0)), z(5))],
                vec![(s(17.0), z(6))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt60s",
        summary: "dual of catalog algebra 60, type (6,5)",
        algebra: parse("q=5 p=6; -251,341,-132,232,153,244,355,456"),
        soliton_frame: Some(frame(
            11,
            vec![
                vec![(2.0 * s(19.0), x(1)), (s(19.0), x(2))],
                vec![(3.0 * s(3.0), x(2))],
                vec![(4.0, x(3))],
                vec![(s(33.0), x(4))],
                vec![(s(22.0), x(5))],
                vec![(1.0, z(1))],
                vec![(4.0 / s(33.0), z(2))],
                vec![(-s(19.0) / s(51.0), z(1)), (2.0 * s(19.0) / s(51.0), z(3))],
                vec![(1.0, z(4))],
                vec![(4.0 / s(33.0), z(5))],
                vec![(1.0, z(6))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt66s",
        summary: "dual of catalog algebra 66, type (6,5)",
        algebra: parse("q=5 p=6; -131,231,452,143,254,345,356"),
        soliton_frame: Some(frame(
            11,
            vec![
                vec![(2.0 / s(2.0), x(1)), (1.0 / s(2.0), x(2))],
                vec![(s(3.0) / s(2.0), x(2))],
                vec![(1.0, x(3))],
                vec![(1.0, x(4))],
                vec![(1.0, x(5))],
                vec![(1.0, z(1))],
                vec![(1.0, z(2))],
                vec![(1.0, z(3))],
                vec![(1.0, z(4))],
                vec![(1.0, z(5))],
                vec![(1.0, z(6))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt72s",
        summary: "dual of catalog algebra 72, type (7,5)",
        algebra: parse("q=5 p=7; -131,231,-252,342,123,154,245,356,457"),
        soliton_frame: Some(frame(
            12,
            vec![
                vec![(4.0, x(1)), (2.0, x(2))],
                vec![(s(19.0) / s(2.0), x(2))],
                vec![(1.0 / 3.0, x(3))],
                vec![(s(11.0), x(4))],
                vec![(1.0 / s(57.0), x(5))],
                vec![(1.0, z(1))],
                vec![(1.0, z(2))],
                vec![(12.0 * s(19.0) / s(29.0), z(3))],
                vec![
                    (2.0 * s(6.0) / (5.0 * s(19.0)), z(2)),
                    (-4.0 * s(6.0) / (5.0 * s(19.0)), z(4)),
                ],
                vec![(3.0 * s(11.0), z(5))],
                vec![(s(2.0) / s(1311.0), z(6))],
                vec![(s(66.0) / s(437.0), z(7))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out.push(CorpusEntry {
        id: "gt78s",
        summary: "dual of catalog algebra 78, type (7,5)",
        algebra: parse("q=5 p=7; -131,231,122,143,254,345,356,457"),
        soliton_frame: Some(frame(
            12,
            vec![
                vec![(-2.0 * s(3.0), x(1)), (-2.0 * s(3.0), x(2))],
                vec![(2.0, x(1)), (-2.0, x(2))],
                vec![(s(14.0), x(3))],
                vec![(s(51.0), x(4))],
                vec![(s(51.0), x(5))],
                vec![(s(14.0) / s(51.0), z(1))],
                vec![(4.0 * s(2.0) / (3.0 * s(17.0)), z(2))],
                vec![(1.0, z(3))],
                vec![(1.0, z(4))],
                vec![(1.0, z(5))],
                vec![(1.0, z(6))],
                vec![(s(51.0) / s(14.0), z(7))],
            ],
        )),
        expected_nice: Some(false),
        expected_einstein: Some(true),
    });

    out
}
