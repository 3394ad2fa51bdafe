//! Benchmark problem generators.

mod policy;
mod portfolio;
mod quadratic;

pub use policy::{gen_policy_eval, policy_eval_problem, simulate_policy_eval, PolicyEval, PolicyEvalSpec};
pub use portfolio::{gen_portfolio, portfolio_problem, simulate_returns, Portfolio, PortfolioSpec};
pub use quadratic::{gen_synthetic_quadratic, Quadratic, QuadraticInstance, QuadraticSpec, COMPONENTS};
