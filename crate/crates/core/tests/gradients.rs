mod common;

#[test]
fn backward_and_jacobian_match_finite_differences() {
    let detail = common::gradient_check(100, 1e-4).unwrap();
    println!("{detail}");
}
