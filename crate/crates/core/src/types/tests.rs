use super::*;
use crate::parser::{parse_configuration, parse_process, parse_type_env};
use crate::syntax::Endpoint;

const ENV: &str = "sort Request = nat\nsort Quote = nat\n\
    chan a_login : <?(Request).!(Quote).&{l_acc: end, l_neg: end, l_rej: end}>\n";

const CLIENT: &str = "req a_login(x). x!<80>. x?(y_quote). if y_quote <= 100 then x <| l_acc. 0 \
    else (if y_quote <= 150 then x <| l_neg. 0 else x <| l_rej. 0)";

fn provider(quote: &str) -> String {
    format!("acc a_login(y). y?(z_req). y!<{quote}>. y |> {{l_acc: 0, l_neg: 0, l_rej: 0}}")
}

fn env() -> TypeEnv {
    parse_type_env(ENV, None).unwrap()
}

#[test]
fn providers_are_well_typed() {
    let src = format!("{CLIENT} | {} | {}", provider("z_req + 10"), provider("z_req * 2"));
    let t = typecheck_process(&parse_process(&src).unwrap(), &env()).unwrap();
    assert!(t.delta.is_empty());
    assert!(t.is_completed());
}

#[test]
fn parallel_requests_violate_linearity() {
    let p = parse_process("req a_login(x).(x!<1>.0 | x!<2>.0)").unwrap();
    let e = typecheck_process(&p, &env()).unwrap_err();
    assert_eq!(e.kind, TypeErrorKind::LinearityViolation);
}

#[test]
fn wrong_payload_sort() {
    let p = parse_process("req a_login(x). x!<true>. x?(q). x <| l_acc. 0").unwrap();
    assert_eq!(typecheck_process(&p, &env()).unwrap_err().kind, TypeErrorKind::SortMismatch);
}

#[test]
fn missing_label() {
    let p = parse_process("req a_login(x). x!<1>. x?(q). x <| l_other. 0").unwrap();
    assert_eq!(typecheck_process(&p, &env()).unwrap_err().kind, TypeErrorKind::LabelMissing);
    let p = parse_process("acc a_login(y). y?(z). y!<z>. y |> {l_acc: 0, l_neg: 0}").unwrap();
    assert_eq!(typecheck_process(&p, &env()).unwrap_err().kind, TypeErrorKind::LabelMissing);
}

#[test]
fn open_endpoints_are_inferred() {
    let p = parse_process("~s!<1>.0 | s?(x).0").unwrap();
    let t = typecheck_process(&p, &TypeEnv::default()).unwrap();
    assert_eq!(t.delta[&Endpoint::minus("s")].to_string(), "!nat.end");
    assert_eq!(t.delta[&Endpoint::plus("s")].to_string(), "?nat.end");
    let closed = parse_process("new s in (~s!<1>.0 | s?(x).0)").unwrap();
    assert!(typecheck_process(&closed, &TypeEnv::default()).unwrap().delta.is_empty());
    let bad = parse_process("new s in (~s!<1>.0 | s?(x).if x then 0 else 0)").unwrap();
    assert!(typecheck_process(&bad, &TypeEnv::default()).is_err());
}

#[test]
fn recursion_types_equirecursively() {
    let p = parse_process("new s in (rec X. ~s!<1>.X | rec Y. s?(x). s?(y). Y)").unwrap();
    typecheck_process(&p, &TypeEnv::default()).unwrap();
}

#[test]
fn delta_delta_counterexample() {
    let m = parse_configuration(
        "new s, t3, t4 in (t1 : ~s!<1>.0 | t2 : s?(x).0 | t3 : 0 | t4 : 0 | [act t5,t6 -> t3,t4 : com(~s, 1, x, 0, 0)])",
    )
    .unwrap();
    match typecheck_config(&m, &TypeEnv::default()) {
        ConfigVerdict::IllTyped { error } => assert_eq!(error.kind, TypeErrorKind::CompositionUndefined),
        other => panic!("{other:?}"),
    }
    assert!(naive_memory_check(&m, &TypeEnv::default()).is_ok());
}

#[test]
fn composition_is_partial() {
    let a = Typing::singleton(Endpoint::plus("s"), SessionType::End);
    let b = Typing::singleton(Endpoint::minus("s"), SessionType::End);
    assert!(a.compose(&b).is_ok());
    assert_eq!(a.compose(&a).unwrap_err().kind, TypeErrorKind::CompositionUndefined);
}
