pub mod bench;
pub mod eval_l1;
pub mod fit;
pub mod score;
pub mod simulate;
pub mod sweep;
