//! Lifetime valuation of grid batteries under cycle and calendar aging.
//!
//! The value of a battery is tracked as a concave piecewise-linear function
//! of remaining capacity for every day of the horizon, built by backward
//! induction over daily arbitrage or regulation stages.

pub mod arbitrage;
pub mod battery;
pub mod degradation;
pub mod engine;
pub mod error;
pub mod flow;
pub mod io;
pub mod regulation;
pub mod value_function;

pub use arbitrage::{solve_daily, verify_solution, DailyArbitrageInstance, DailySolution};
pub use battery::{BatteryParams, DispatchProfile};
pub use degradation::{CalendarModel, CycleSet, LinearizedStress, StressFunction};
pub use engine::{EolScenarioSet, MarketDay, RunConfig, RunOutput, StageMode};
pub use error::{Error, Result};
pub use regulation::{PolicyParams, RegulationDay};
pub use value_function::{PwlValue, ResaleCurve, SohGrid, ValueSurface};
