//! Reference values: LP optima over type grids, local menu search and simple
//! selling baselines.

mod baselines;
mod grid_lp;
mod search;
pub mod simplex;

pub use baselines::{baseline_menus, baselines, bundle_price, Baselines};
pub use grid_lp::{
    grid_types, opt_grid_lp, opt_upper_bound, opt_upper_bounds, solve_type_lp, GridMechanism, LpSolution,
    UpperBound, MAX_GRID,
};
pub use search::{opt_menu_search, opt_menu_sweep, SearchOptions};
