//! The bundled search program is a frozen artifact: these tests pin its
//! bytes to the program builder and check that the parsed file drives the
//! engine to the analytically known probabilities.

use pwp_core::{
    build_grover_program, grover_env, parse_program, pretty, success_post, success_prob_closed, wp,
    GroverParams,
};

const CORPUS: &str = include_str!("../corpus/grover.pwp");

#[test]
fn corpus_bytes_match_the_builder() {
    let expected = format!("{}\n", pretty(&build_grover_program()));
    assert_eq!(CORPUS, expected);
}

#[test]
fn corpus_parses_to_the_builder_syntax() {
    let parsed = parse_program(CORPUS).expect("bundled program parses");
    assert_eq!(parsed, build_grover_program());
}

#[test]
fn parsed_corpus_reproduces_closed_form_probabilities() {
    let program = parse_program(CORPUS).unwrap();
    for (n, c) in [(4u64, 1u64), (8, 2), (16, 3)] {
        let params = GroverParams::new(n, n / 2, c).unwrap();
        let got = wp(&program, &success_post(), &grover_env(&params)).unwrap();
        let expect = success_prob_closed(n, c);
        assert!(
            (got - expect).abs() < 1e-9,
            "n={n} c={c}: {got} vs {expect}"
        );
    }
}
