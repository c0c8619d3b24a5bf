//! Concrete systems: the free field in a cylinder, the relativistic Landau
//! problem and the spinning cosmic string.

mod free;
mod landau;
mod string;

pub use free::{free_energy, free_field};
pub use landau::{landau_d2_dot, landau_pencil, landau_rotation_path, spin_rotation, LandauRotation, LandauScenario};
pub use string::{
    string_analytic_energy, string_box_connection, string_box_loop, string_operators, string_pencil, string_phase,
    BoxLoop, DeficitRun, LoopOperators, StringLoop, StringScenario,
};
