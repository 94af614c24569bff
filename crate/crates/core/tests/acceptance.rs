//! End-to-end acceptance run: every library-level claim is exercised through
//! the named verification suites, then grouped into the twelve headline
//! criteria.  One line is printed per criterion.

use std::collections::HashMap;

use chaplygin::verify::{run_suite, CheckResult};

/// The twelve headline criteria, each backed by a set of named checks.
const CRITERIA: [(&str, &[&str]); 12] = [
    (
        "01-algebra-structure",
        &[
            "orthonormality-n3",
            "orthonormality-n4",
            "structure-antisymmetry-n3",
            "structure-antisymmetry-n4",
            "jacobi-n3",
            "jacobi-n4",
            "hh-block-n3",
            "hh-block-n4",
            "mixed-block-n3",
            "mixed-block-n4",
            "c-y3-z1z2-n3",
        ],
    ),
    (
        "02-coframe-calculus",
        &[
            "coframe-duality-n3",
            "coframe-duality-n4",
            "drho-structure-n3",
            "drho-structure-n4",
            "dtheta-plus-omega-s-n3",
            "dtheta-plus-omega-s-n4",
            "domega-s-n3",
            "domega-s-n4",
        ],
    ),
    (
        "03-field-agreement",
        &["field-agreement-n3", "field-agreement-n4"],
    ),
    (
        "04-momentum-map",
        &[
            "momentum-identity-n3",
            "momentum-identity-n4",
            "omega-nh-momentum-witness-n3",
            "omega-nh-momentum-witness-n4",
        ],
    ),
    (
        "05-conservation-and-order",
        &[
            "energy-conservation-n3",
            "energy-conservation-n4",
            "momentum-conservation-n3",
            "momentum-conservation-n4",
            "convergence-order-n3",
            "convergence-order-n4",
        ],
    ),
    (
        "06-constrained-oracle",
        &["oracle-deviation-n3", "oracle-deviation-n4"],
    ),
    (
        "07-homogeneous-hamiltonicity",
        &[
            "homogeneous-level-closedness-n3",
            "homogeneous-level-closedness-n4",
            "straight-line-rolling-n3",
            "straight-line-rolling-n4",
        ],
    ),
    (
        "08-n3-hamiltonization",
        &[
            "fomega-level-closedness-n3",
            "conformal-factor-value-n3",
            "conformal-h-invariance-n3",
        ],
    ),
    ("09-nonclosedness-witness", &["domega-nh-witness-n3"]),
    (
        "10-chi-connection",
        &[
            "sigma-annihilation-n3",
            "sigma-annihilation-n4",
            "truncation-identity-n3",
            "truncation-contraction-n4",
        ],
    ),
    (
        "11-relative-equilibria",
        &["relative-equilibria-n3", "relative-equilibria-n4"],
    ),
    (
        "12-reduction-audit",
        &["dimension-audit-n3", "dimension-audit-n4"],
    ),
];

#[test]
fn acceptance() {
    let ns = [3usize, 4];
    let mut checks: HashMap<String, CheckResult> = HashMap::new();
    for suite in ["algebra", "forms", "truncation", "hamiltonization", "oracle"] {
        let report = run_suite(suite, &ns, 0).expect("suite must run");
        for c in report.checks {
            checks.insert(c.name.clone(), c);
        }
    }

    let mut all_ok = true;
    for (label, names) in CRITERIA {
        let mut ok = true;
        let mut detail = Vec::new();
        for name in names {
            match checks.get(*name) {
                Some(c) if c.pass => {}
                Some(c) => {
                    ok = false;
                    detail.push(format!("{} residual {:.3e}", c.name, c.residual));
                }
                None => {
                    ok = false;
                    detail.push(format!("{name} missing"));
                }
            }
        }
        if ok {
            println!("PASS {label}");
        } else {
            println!("FAIL {label} ({})", detail.join(", "));
            all_ok = false;
        }
    }
    assert!(all_ok, "acceptance criteria failed");
}
