mod common;

use common::{gradient_gap, jet_gaps, problems};
use control_pinn::problems::ControlProblem;

#[test]
fn loss_gradient_matches_directional_differences() {
    for p in problems() {
        let gap = gradient_gap(&p, 10);
        assert_eq!(
            gap.directions,
            10,
            "{}: too many directions across activation kinks",
            p.name()
        );
        assert!(gap.worst < 1e-4, "{}: relative gap {}", p.name(), gap.worst);
    }
}

#[test]
fn input_jets_match_central_differences() {
    for p in problems() {
        let g = jet_gaps(&p, 10);
        assert_eq!(g.points, 10, "{}: too many points near activation kinks", p.name());
        assert!(g.first < 1e-5, "{}: first-order gap {}", p.name(), g.first);
        assert!(g.second < 1e-4, "{}: second-order gap {}", p.name(), g.second);
    }
}
