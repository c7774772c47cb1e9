use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer};

/// Threshold on `|det(W / ‖W‖_F)|` below which `W` counts as singular.
pub const DET_TOLERANCE: f64 = 1e-10;

/// Which of the necessary conditions for `z ↦ σ(Wz + b)` to be a
/// homeomorphism of `ℝⁿ` hold for a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomeomorphismReport {
    pub square: bool,
    pub invertible: bool,
    pub bijective_activation: bool,
    /// Sigmoid is injective and bijective onto `(0, 1)`, but not onto `ℝ`.
    pub bijective_onto_image: bool,
    pub possibly_homeomorphic: bool,
}

pub fn homeomorphism_diagnostic(layer: &DenseLayer) -> HomeomorphismReport {
    let w = &layer.weights;
    let square = w.is_square();
    let invertible = square && {
        let norm = w.norm();
        norm > 0.0 && (w / norm).determinant().abs() > DET_TOLERANCE
    };
    let bijective_activation = layer.activation == Activation::Tanh;
    let bijective_onto_image = matches!(layer.activation, Activation::Tanh | Activation::Sigmoid);
    HomeomorphismReport {
        square,
        invertible,
        bijective_activation,
        bijective_onto_image,
        possibly_homeomorphic: square && invertible && bijective_activation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{reference_architecture, NetworkParams};
    use nalgebra::{DMatrix, DVector};

    fn layer(w: DMatrix<f64>, activation: Activation) -> DenseLayer {
        let n = w.nrows();
        DenseLayer {
            weights: w,
            bias: DVector::zeros(n),
            activation,
        }
    }

    #[test]
    fn identity_tanh_may_be_homeomorphic() {
        let r = homeomorphism_diagnostic(&layer(DMatrix::identity(2, 2), Activation::Tanh));
        assert!(r.square && r.invertible && r.bijective_activation);
        assert!(r.possibly_homeomorphic);
    }

    #[test]
    fn reference_first_layer_is_not_square() {
        let net = NetworkParams::init(&reference_architecture(Activation::Tanh), 0).unwrap();
        let r = homeomorphism_diagnostic(&net.layers[0]);
        assert!(!r.square);
        assert!(!r.possibly_homeomorphic);
    }

    #[test]
    fn relu_is_never_bijective() {
        for w in [DMatrix::identity(3, 3), DMatrix::from_element(2, 4, 1.0)] {
            let r = homeomorphism_diagnostic(&layer(w, Activation::Relu));
            assert!(!r.bijective_activation);
            assert!(!r.possibly_homeomorphic);
        }
    }

    #[test]
    fn singular_and_scaled_matrices() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(!homeomorphism_diagnostic(&layer(singular, Activation::Tanh)).invertible);
        assert!(
            !homeomorphism_diagnostic(&layer(DMatrix::zeros(3, 3), Activation::Tanh)).invertible
        );
        // Scale does not matter after normalization.
        let tiny = DMatrix::identity(3, 3) * 1e-8;
        assert!(homeomorphism_diagnostic(&layer(tiny, Activation::Tanh)).invertible);
    }

    #[test]
    fn sigmoid_is_flagged_separately() {
        let r = homeomorphism_diagnostic(&layer(DMatrix::identity(2, 2), Activation::Sigmoid));
        assert!(!r.bijective_activation);
        assert!(r.bijective_onto_image);
        assert!(!r.possibly_homeomorphic);
    }
}
