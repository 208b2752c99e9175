use super::{NnError, Tensor};

/// `max(x, 0)` elementwise.
pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    Tensor::from_vec(x.shape(), data).expect("same shape")
}

/// Passes `grad` where the forward input was strictly positive; the subgradient at 0 is 0.
pub fn relu_backward(x: &Tensor, grad: &Tensor) -> Result<Tensor, NnError> {
    grad.expect_shape(x.shape(), "relu grad")?;
    let data = x
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(x.shape(), data)
}
