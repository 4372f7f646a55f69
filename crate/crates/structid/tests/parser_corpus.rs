mod common;

use proptest::prelude::*;
use structid::{parse_model, serialize_model, ParseError};

#[test]
fn corpus_round_trips() {
    for name in common::CORPUS {
        let m = common::model(name);
        m.validate().unwrap();
        let text = serialize_model(&m);
        let back = parse_model(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(back, m, "{name}");
        assert_eq!(serialize_model(&back), text, "{name}");
    }
}

#[test]
fn corpus_sizes() {
    let shape = |name| {
        let m = common::model(name);
        (m.params.len(), m.n_states(), m.n_outputs(), m.n_inputs())
    };
    assert_eq!(shape("crn"), (6, 6, 2, 0));
    assert_eq!(shape("cholera"), (7, 4, 2, 0));
    assert_eq!(shape("nfkb"), (29, 15, 6, 1));
    assert_eq!(shape("pharmacokinetics"), (6, 4, 1, 0));
    assert_eq!(common::model("predator_prey").theta_names()[4..], ["theta5", "theta6"]);
}

#[test]
fn errors_carry_positions() {
    let err = parse_model("params: a\nstates:\n  x' = a*q\noutputs:\n  y = x\n").unwrap_err();
    match err {
        ParseError::UndeclaredSymbol { span, name } => {
            assert_eq!(name, "q");
            assert_eq!((span.line, span.column), (3, 10));
        }
        other => panic!("{other:?}"),
    }
}

fn token() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "model", "params:", "inputs:", "states:", "outputs:", "init:", "x", "x'", "y", "a", "b", "u",
        "=", "+", "-", "*", "/", "^", "(", ")", ",", "0", "2", "1/2", "3.5", "\n", "  ", "#", "x1",
    ])
}

proptest! {
    #[test]
    fn arbitrary_text_never_panics(s in "\\PC{0,200}") {
        let _ = parse_model(&s);
    }

    #[test]
    fn token_soup_never_panics(tokens in prop::collection::vec(token(), 0..80)) {
        let _ = parse_model(&tokens.join(" "));
    }

    #[test]
    fn mutated_corpus_never_panics(idx in 0usize..common::CORPUS.len(), cut in any::<prop::sample::Index>(), junk in "\\PC{0,8}") {
        let text = common::source(common::CORPUS[idx]);
        let at = cut.index(text.len() + 1);
        let at = (0..=at).rev().find(|&k| text.is_char_boundary(k)).unwrap_or(0);
        let mutated = format!("{}{}{}", &text[..at], junk, &text[at..]);
        if let Ok(m) = parse_model(&mutated) {
            prop_assert_eq!(parse_model(&serialize_model(&m)).unwrap(), m);
        }
    }
}
