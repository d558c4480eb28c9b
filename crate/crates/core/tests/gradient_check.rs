mod common;

use common::checks::gradient_case;
use xling_topics::model::Alignment;

#[test]
fn contrastive_objective_gradients() {
    gradient_case(Alignment::Tami, false, 1);
    gradient_case(Alignment::Tami, false, 2);
}

#[test]
fn contrastive_objective_gradients_with_dropout() {
    gradient_case(Alignment::Tami, true, 3);
}

#[test]
fn direct_objective_gradients() {
    gradient_case(Alignment::Direct, false, 4);
    gradient_case(Alignment::Direct, true, 5);
}
