use regxplain::acceptance::{check_exact_values, check_gradients, check_mixup_invariants, check_triangle_oracle};

#[test]
fn exact_values() {
    let o = check_exact_values();
    assert_eq!(o.pass, Some(true), "{}", o.line());
}

#[test]
fn triangle_oracle() {
    let o = check_triangle_oracle(100, 0);
    assert_eq!(o.pass, Some(true), "{}", o.line());
}

#[test]
fn gradient_suite() {
    let o = check_gradients();
    assert_eq!(o.pass, Some(true), "{}", o.line());
}

#[test]
fn mixup_invariants() {
    let o = check_mixup_invariants(200, 0);
    assert_eq!(o.pass, Some(true), "{}", o.line());
}
