pub mod ablate;
pub mod cloud;
pub mod edge;
pub mod eval_traj;
pub mod session_io;
pub mod simulate;
pub mod train;
