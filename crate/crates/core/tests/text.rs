use std::collections::HashMap;

use memfuse::text::*;
use proptest::prelude::*;

fn toy_lexicon() -> Lexicon {
    Lexicon::new(
        "toy",
        vec!["valence".into()],
        [("good".to_string(), vec![1.0]), ("bad".to_string(), vec![-1.0])],
    )
    .unwrap()
}

fn toy_scorer() -> RuleScorer {
    RuleScorer::new("rules", HashMap::from([("good".to_string(), 1.9)])).unwrap()
}

#[test]
fn preprocess_examples() {
    assert_eq!(
        preprocess("I can't believe it was 1995"),
        "I cannot believe it was that year"
    );
    assert_eq!(
        preprocess("we won 3 games in the 90s"),
        "we won 0 games in that decade"
    );
    assert_eq!(preprocess("a walk in the park"), "a walk in the park");
}

#[test]
fn tokenize_examples() {
    let norms = |s: &str| tokenize(s).into_iter().map(|t| t.norm).collect::<Vec<_>>();
    assert_eq!(norms("Good times!"), ["good", "times", "!"]);
    assert!(tokenize("").is_empty());
    assert_eq!(norms("mother's day"), ["mother's", "day"]);
    // the possessive survives preprocessing too
    assert_eq!(norms(&preprocess("mother's day")), ["mother's", "day"]);
}

#[test]
fn lemmatize_examples() {
    assert_eq!(lemmatize("memories"), "memory");
    assert_eq!(lemmatize("run"), "run");
    assert_eq!(lemmatize("felt"), "feel");
    assert_eq!(lemmatize("went"), "go");
    assert_eq!(lemmatize("children"), "child");
}

#[test]
fn lexical_examples() {
    let lex = [toy_lexicon()];
    let (v, cov) = lexical_features("good good bad", &lex, &toy_scorer()).unwrap();
    assert_eq!(v.len(), 1 + 4);
    assert_eq!(v[0], (1.0 + 1.0 - 1.0) / 3.0);
    assert_eq!(cov, 1.0);

    let (v, cov) = lexical_features("good", &lex, &toy_scorer()).unwrap();
    assert_eq!(v[0], 1.0);
    assert_eq!(cov, 1.0);

    let (v, cov) = lexical_features("zebra quartz", &lex, &toy_scorer()).unwrap();
    assert_eq!(v[0], 0.0);
    assert_eq!(cov, 0.0);

    assert!(lexical_features("good", &[], &toy_scorer()).is_err());
}

#[test]
fn rule_sentiment_examples() {
    let s = rule_sentiment("", &toy_scorer());
    assert_eq!((s.compound, s.neutral), (0.0, 1.0));

    // negated token valence -1.9·0.74, normalized by sqrt(x² + 15)
    let x: f64 = -1.9 * 0.74;
    assert!((x - -1.406).abs() < 1e-12);
    let s = rule_sentiment("not good", &toy_scorer());
    assert!((s.compound - x / (x * x + 15.0).sqrt()).abs() < 1e-12);
    assert!((s.compound - -0.341).abs() < 5e-4);

    let plain = rule_sentiment("good", &toy_scorer()).compound;
    let emphatic = rule_sentiment("good!!", &toy_scorer()).compound;
    assert!(emphatic > plain);
}

#[test]
fn embedding_examples() {
    let t1 = EmbeddingTable::new(
        "t1",
        2,
        [
            ("left".to_string(), vec![0.0, 2.0]),
            ("right".to_string(), vec![2.0, 0.0]),
        ],
    )
    .unwrap();
    let t2 = EmbeddingTable::new("t2", 3, [("left".to_string(), vec![1.0, 2.0, 3.0])]).unwrap();

    let (v, cov) = embed_features("left right", std::slice::from_ref(&t1)).unwrap();
    assert_eq!(v, [1.0, 1.0]);
    assert_eq!(cov, 1.0);

    let (v, _) = embed_features("left", &[t1.clone(), t2]).unwrap();
    assert_eq!(v, [0.0, 2.0, 1.0, 2.0, 3.0]);

    let (v, cov) = embed_features("nothing here", &[t1]).unwrap();
    assert_eq!(v, [0.0, 0.0]);
    assert_eq!(cov, 0.0);

    assert!(embed_features("left", &[]).is_err());
}

#[test]
fn bundled_dimensions() {
    let res = TextResources::bundled();
    assert_eq!(res.lexical_dim(), 130);
    assert_eq!(res.embedding_dim(), 500);
    let f = extract("We danced at my sister's wedding, so happy!", res).unwrap();
    assert_eq!(f.lexical.len(), 130);
    assert_eq!(f.embedding.len(), 500);
    assert!(f.lexical_coverage > 0.0 && f.embedding_coverage > 0.0);
    assert_eq!(res.lexical_names().len(), 130);
}

#[test]
fn bundled_resources_separate_valence() {
    let res = TextResources::bundled();
    let pos = rule_sentiment("a wonderful happy day", &res.scorer).compound;
    let neg = rule_sentiment("a terrible sad day", &res.scorer).compound;
    assert!(pos > 0.5 && neg < -0.5, "{pos} {neg}");
}

proptest! {
    #[test]
    fn only_zero_digits_survive(s in "[a-z0-9' ]{0,40}") {
        let out = preprocess(&s);
        prop_assert!(out.chars().filter(|c| c.is_ascii_digit()).all(|c| c == '0'));
    }

    #[test]
    fn features_have_fixed_shape(s in "\\PC{0,60}") {
        let f = extract(&s, TextResources::bundled()).unwrap();
        prop_assert_eq!(f.lexical.len(), 130);
        prop_assert_eq!(f.embedding.len(), 500);
        prop_assert!((0.0..=1.0).contains(&f.lexical_coverage));
        prop_assert!(f.lexical.iter().chain(&f.embedding).all(|v| v.is_finite()));
    }

    #[test]
    fn compound_is_bounded(s in "(good|bad|not|very|!| ){0,20}") {
        let c = rule_sentiment(&s, &toy_scorer()).compound;
        prop_assert!((-1.0..=1.0).contains(&c));
    }
}
