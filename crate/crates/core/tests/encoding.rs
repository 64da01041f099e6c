use attitudes::algebra::parse_relation;
use attitudes::encode::{encode_case, AttrCategory, AttributeSchema};
use attitudes::rules::{applicable_rewrites, RuleSet};
use attitudes::segment::{segment, ElementaryStep, DEFAULT_BUDGET};

fn only_step(a: &str, b: &str) -> ElementaryStep {
    let mut s = segment(&parse_relation(a).unwrap(), &parse_relation(b).unwrap(), &RuleSet::default(), DEFAULT_BUDGET)
        .unwrap();
    assert_eq!(s.len(), 1);
    s.pop().unwrap()
}

#[test]
fn coefficient_moved_as_additive_term() {
    use AttrCategory::*;
    let schema = AttributeSchema::default();
    let step = only_step("-5x+4-7/3=9x^2-10", "x+4-7/3=9x^2-10+5");
    assert_eq!(step.rule_id, "coef_move_additive");
    let case = encode_case(&step, &schema).unwrap();
    let expected = [
        (Context, "arg.side", "left"),
        (Context, "arg.location", "beginning"),
        (Context, "arg.polynomial", "false"),
        (Context, "arg.coefficient", "true"),
        (Context, "arg.implicitSign", "false"),
        (Context, "arg.operator", "×"),
        (Context, "arg.category", "multiplicative"),
        (Context, "arg.negative", "true"),
        (Context, "term.polynomial", "true"),
        (Context, "expr.type", "equation"),
        (Context, "expr.polynomial", "true"),
        (Action, "arg.operatorChanged", "true"),
        (Action, "arg.categoryChanged", "true"),
        (Action, "arg.signChanged", "true"),
        (Action, "expr.typeChanged", "false"),
        (Action, "expr.correct", "false"),
        (Outcome, "arg.operator", "+"),
        (Outcome, "arg.category", "additive"),
        (Outcome, "arg.negative", "false"),
        (Outcome, "expr.type", "equation"),
    ];
    for (cat, name, want) in expected {
        assert_eq!(case.value(&schema, cat, name), Some(want), "{cat}.{name}");
    }
}

#[test]
fn action_attributes_agree_with_context_and_outcome() {
    use AttrCategory::*;
    let schema = AttributeSchema::default();
    let rules = RuleSet::default();
    let states = ["7x-4=3", "-4x<2", "x/3=2", "2(x-3)>=4", "(x+1)^2=0", "2x+3x-1<=7-x", "-5x+4-7/3=9x^2-10", "3-x>x/(-2)"];
    let mut checked = 0;
    for s in states {
        let state = parse_relation(s).unwrap();
        for rw in applicable_rewrites(&state, &rules) {
            let step = ElementaryStep {
                from: state.clone(),
                to: rw.result.clone(),
                rule_id: rw.rule.id.clone(),
                correctness: rw.rule.correctness,
                locus: rw.locus.clone(),
            };
            let c = encode_case(&step, &schema).unwrap();
            let v = |cat, n: &str| c.value(&schema, cat, n).unwrap();
            let differs = |a: &str| (v(Context, a) != v(Outcome, a)).to_string();
            assert_eq!(v(Action, "arg.operatorChanged"), differs("arg.operator"));
            assert_eq!(v(Action, "arg.categoryChanged"), differs("arg.category"));
            assert_eq!(v(Action, "arg.signChanged"), differs("arg.negative"));
            assert_eq!(v(Action, "expr.typeChanged"), differs("expr.type"));
            assert_eq!(v(Action, "expr.correct"), rw.rule.correctness.is_correct().to_string());
            let cat_of = |op: &str| match op {
                "+" => "additive",
                "^" => "exponent",
                _ => "multiplicative",
            };
            assert_eq!(v(Context, "arg.category"), cat_of(v(Context, "arg.operator")));
            assert_eq!(v(Outcome, "arg.category"), cat_of(v(Outcome, "arg.operator")));
            checked += 1;
        }
    }
    assert!(checked > 40);
}
