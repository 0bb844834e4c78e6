//! Market model, power utility, discount measures and Merton closed forms.

mod measure;
mod merton;
mod params;
mod utility;

pub use measure::{DiscountMeasure, HorizonVariant};
pub use merton::{
    merton_feedback, merton_marginal, merton_value, merton_wealth_closed_form, perpetual_value,
    IncomeShift, MertonPolicy,
};
pub use params::{DerivedConstants, MarketParams};
pub use utility::PowerUtility;
