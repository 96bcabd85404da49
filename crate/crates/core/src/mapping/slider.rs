//! Horizontal slider geometry and the slider-setting planner.
//!
//! The knob position is unknown to the sender, so a drag cannot start on it
//! directly. The planner moves the pointer to a track endpoint, clicks the
//! track until the knob has been pushed under the pointer, then drags the
//! knob to the pixel that quantizes to the target value.
//!
//! Model shared with the virtual screen:
//! - the knob occupies `[track_x + offset, track_x + offset + knob_width)`
//!   with `offset` in `[0, usable]`, `usable = track_len - knob_width`;
//! - `value = round_half_up(offset / usable * (max - min)) + min`;
//! - a click on the track outside the knob moves it `page_step` pixels
//!   toward the pointer, clamped to the track;
//! - a drag puts the knob center on the pointer x (clamped) and then snaps
//!   the knob to the position of the value it quantizes to.

use serde::{Deserialize, Serialize};

use super::coord::{scale_width, to_absolute, PixelCoord, RelativeCoord, Resolution};
use super::event::{MouseButton, UiEvent};
use super::MappingError;

/// Default page step as a fraction of the usable track length.
pub const DEFAULT_PAGE_STEP_FRACTION: f64 = 0.25;
/// Default upper bound on endpoint clicks before the drag.
pub const DEFAULT_MAX_CLICKS: u32 = 4;

/// Pixel geometry and value range of a horizontal slider.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliderSpec {
    pub track_x: u32,
    /// Vertical center line of the track.
    pub track_y: u32,
    pub track_len: u32,
    pub knob_width: u32,
    pub min: i64,
    pub max: i64,
    /// Pixels the knob moves per track click.
    pub page_step: f64,
}

impl SliderSpec {
    pub fn validate(&self) -> Result<(), MappingError> {
        let fail = |reason: &str| Err(MappingError::BadSlider(reason.to_string()));
        if self.knob_width == 0 {
            return fail("knob width must be positive");
        }
        if self.track_len <= self.knob_width {
            return fail("track must be longer than the knob");
        }
        if self.max <= self.min {
            return fail("max must be greater than min");
        }
        if !(self.page_step.is_finite() && self.page_step > 0.0) {
            return fail("page step must be positive");
        }
        Ok(())
    }

    pub fn default_page_step(track_len: u32, knob_width: u32) -> f64 {
        track_len.saturating_sub(knob_width) as f64 * DEFAULT_PAGE_STEP_FRACTION
    }

    pub fn usable(&self) -> f64 {
        (self.track_len - self.knob_width) as f64
    }

    fn range(&self) -> f64 {
        (self.max - self.min) as f64
    }

    pub fn left_endpoint(&self) -> PixelCoord {
        PixelCoord::new(self.track_x, self.track_y)
    }

    pub fn right_endpoint(&self) -> PixelCoord {
        PixelCoord::new(self.track_x + self.track_len - 1, self.track_y)
    }

    pub fn offset_for_value(&self, value: i64) -> f64 {
        (value - self.min) as f64 / self.range() * self.usable()
    }

    /// Quantization rule: nearest representable value, halves rounding up.
    pub fn value_at(&self, offset: f64) -> i64 {
        let steps = (offset / self.usable() * self.range() + 0.5).floor() as i64;
        (steps + self.min).clamp(self.min, self.max)
    }

    pub fn knob_left(&self, offset: f64) -> f64 {
        self.track_x as f64 + offset
    }

    /// Whether pixel column `x` lies on the knob.
    pub fn knob_covers(&self, offset: f64, x: u32) -> bool {
        let left = self.knob_left(offset);
        let x = x as f64;
        left <= x && x < left + self.knob_width as f64
    }

    /// Knob offset after one track click at column `x`.
    pub fn page_toward(&self, offset: f64, x: u32) -> f64 {
        if self.knob_covers(offset, x) {
            offset
        } else if (x as f64) < self.knob_left(offset) {
            (offset - self.page_step).max(0.0)
        } else {
            (offset + self.page_step).min(self.usable())
        }
    }

    /// Value reached by dragging the knob center to column `x`.
    pub fn drag_value(&self, x: u32) -> i64 {
        let raw = x as f64 - self.track_x as f64 - self.knob_width as f64 / 2.0;
        self.value_at(raw.clamp(0.0, self.usable()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointPolicy {
    #[default]
    Left,
    Right,
    /// Endpoint nearer the assumed knob position; left when unknown.
    Nearest,
}

/// What the planner may assume about the knob before the first click.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum KnobStart {
    /// Plan for the worst case: the knob at the far end of the track.
    #[default]
    Unknown,
    /// Knob offset in pixels from the track start.
    Offset(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliderPlanConfig {
    pub max_clicks: u32,
    pub endpoint: EndpointPolicy,
}

impl Default for SliderPlanConfig {
    fn default() -> Self {
        SliderPlanConfig {
            max_clicks: DEFAULT_MAX_CLICKS,
            endpoint: EndpointPolicy::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliderPlan {
    pub endpoint: PixelCoord,
    pub clicks: u32,
    pub drag_to: PixelCoord,
}

impl SliderPlan {
    /// `[move(endpoint), click × k, drag(endpoint → target)]`
    pub fn events(&self) -> Vec<UiEvent<PixelCoord>> {
        let mut out = Vec::with_capacity(self.clicks as usize + 2);
        out.push(UiEvent::MouseMove(self.endpoint));
        out.extend((0..self.clicks).map(|_| UiEvent::MouseClick(MouseButton::Left)));
        out.push(UiEvent::Drag {
            from: self.endpoint,
            to: self.drag_to,
        });
        out
    }
}

pub fn plan_slider_set(
    slider: &SliderSpec,
    target: i64,
    cfg: &SliderPlanConfig,
    start: KnobStart,
) -> Result<SliderPlan, MappingError> {
    slider.validate()?;
    if target < slider.min || target > slider.max {
        return Err(MappingError::ValueOutOfRange {
            value: target,
            min: slider.min,
            max: slider.max,
        });
    }

    let go_right = match (cfg.endpoint, start) {
        (EndpointPolicy::Left, _) => false,
        (EndpointPolicy::Right, _) => true,
        (EndpointPolicy::Nearest, KnobStart::Unknown) => false,
        (EndpointPolicy::Nearest, KnobStart::Offset(off)) => off > slider.usable() / 2.0,
    };
    let endpoint = if go_right {
        slider.right_endpoint()
    } else {
        slider.left_endpoint()
    };
    let mut offset = match start {
        KnobStart::Offset(off) => off.clamp(0.0, slider.usable()),
        KnobStart::Unknown if go_right => 0.0,
        KnobStart::Unknown => slider.usable(),
    };

    let mut clicks = None;
    for k in 0..=cfg.max_clicks {
        if slider.knob_covers(offset, endpoint.x) {
            clicks = Some(k);
            break;
        }
        offset = slider.page_toward(offset, endpoint.x);
    }
    let clicks = clicks.ok_or(MappingError::PlanInfeasible {
        max_clicks: cfg.max_clicks,
    })?;

    let drag_x = drag_column(slider, target).ok_or(MappingError::Unrepresentable {
        value: target,
        track_len: slider.track_len,
    })?;
    Ok(SliderPlan {
        endpoint,
        clicks,
        drag_to: PixelCoord::new(drag_x, slider.track_y),
    })
}

/// Track column nearest the ideal knob center whose drag lands on `target`.
fn drag_column(slider: &SliderSpec, target: i64) -> Option<u32> {
    let ideal = slider.track_x as f64 + slider.offset_for_value(target) + slider.knob_width as f64 / 2.0;
    let first = slider.track_x as i64;
    let last = first + slider.track_len as i64 - 1;
    let center = ((ideal + 0.5).floor() as i64).clamp(first, last);
    for d in 0..slider.track_len as i64 {
        for x in [center - d, center + d] {
            if (first..=last).contains(&x) && slider.drag_value(x as u32) == target {
                return Some(x as u32);
            }
        }
    }
    None
}

/// Where the value of a `slider_set` step comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SliderValue {
    Fixed(i64),
    /// Parsed from the input key's payload at resolve time.
    FromPayload,
}

/// Resolution-relative description of a slider, stored in the mapping table
/// and turned into a [`SliderSpec`] per target resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SliderTemplate {
    pub left: RelativeCoord,
    pub right: RelativeCoord,
    pub knob_width_px: f64,
    pub reference: Resolution,
    pub min: i64,
    pub max: i64,
    /// Fraction of the usable track length.
    pub page_step_fraction: f64,
    pub value: SliderValue,
    pub plan: SliderPlanConfig,
    /// Knob value assumed before the first click.
    pub assume_value: Option<i64>,
}

impl SliderTemplate {
    pub fn spec_at(&self, target: Resolution) -> Result<SliderSpec, MappingError> {
        let left = to_absolute(self.left, target);
        let right = to_absolute(self.right, target);
        if right.x <= left.x {
            return Err(MappingError::BadSlider(format!(
                "track collapses to {} px at {target}",
                right.x.saturating_sub(left.x) + 1
            )));
        }
        let track_len = right.x - left.x + 1;
        let knob = scale_width(self.knob_width_px, self.reference, target);
        let knob_width = ((knob + 0.5).floor() as u32).max(1);
        let usable = track_len.saturating_sub(knob_width) as f64;
        let spec = SliderSpec {
            track_x: left.x,
            track_y: left.y,
            track_len,
            knob_width,
            min: self.min,
            max: self.max,
            page_step: usable * self.page_step_fraction,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn plan_at(&self, target: Resolution, value: i64) -> Result<SliderPlan, MappingError> {
        let spec = self.spec_at(target)?;
        let start = match self.assume_value {
            Some(v) => KnobStart::Offset(spec.offset_for_value(v.clamp(spec.min, spec.max))),
            None => KnobStart::Unknown,
        };
        plan_slider_set(&spec, value, &self.plan, start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Track 100..300, knob 10 px, values 0..=100.
    fn demo(page_step: f64) -> SliderSpec {
        SliderSpec {
            track_x: 100,
            track_y: 20,
            track_len: 200,
            knob_width: 10,
            min: 0,
            max: 100,
            page_step,
        }
    }

    #[test]
    fn quantization_by_hand() {
        let s = demo(47.0);
        assert_eq!(s.usable(), 190.0);
        assert_eq!(s.offset_for_value(50), 95.0);
        // 48 / 190 * 100 = 25.26
        assert_eq!(s.value_at(95.0 - 47.0), 25);
        // 0.95 / 190 * 100 = 0.5 rounds up
        assert_eq!(s.value_at(0.95), 1);
        assert_eq!(s.value_at(190.0), 100);
    }

    #[test]
    fn knob_at_min_and_target_min_needs_no_clicks() {
        let s = demo(47.5);
        let plan = plan_slider_set(&s, 0, &SliderPlanConfig::default(), KnobStart::Offset(0.0)).unwrap();
        assert_eq!(plan.clicks, 0);
        assert_eq!(
            plan.events(),
            vec![
                UiEvent::MouseMove(PixelCoord::new(100, 20)),
                UiEvent::Drag {
                    from: PixelCoord::new(100, 20),
                    to: plan.drag_to
                },
            ]
        );
        assert_eq!(s.drag_value(plan.drag_to.x), 0);
    }

    #[test]
    fn worst_case_needs_four_clicks_at_default_step() {
        let s = demo(SliderSpec::default_page_step(200, 10));
        let plan = plan_slider_set(&s, 75, &SliderPlanConfig::default(), KnobStart::Unknown).unwrap();
        assert_eq!(plan.clicks, 4);
        let right = SliderPlanConfig {
            endpoint: EndpointPolicy::Right,
            ..Default::default()
        };
        let plan = plan_slider_set(&s, 75, &right, KnobStart::Unknown).unwrap();
        assert_eq!(plan.clicks, 4);
        assert_eq!(plan.endpoint, PixelCoord::new(299, 20));
    }

    #[test]
    fn out_of_range_and_infeasible() {
        let s = demo(47.5);
        assert!(matches!(
            plan_slider_set(&s, 101, &SliderPlanConfig::default(), KnobStart::Unknown),
            Err(MappingError::ValueOutOfRange { .. })
        ));
        let tiny = demo(10.0);
        assert!(matches!(
            plan_slider_set(&tiny, 10, &SliderPlanConfig::default(), KnobStart::Unknown),
            Err(MappingError::PlanInfeasible { max_clicks: 4 })
        ));
    }

    #[test]
    fn nearest_endpoint_follows_assumption() {
        let s = demo(47.5);
        let cfg = SliderPlanConfig {
            endpoint: EndpointPolicy::Nearest,
            ..Default::default()
        };
        // Knob at [290, 300) already covers column 299.
        let plan = plan_slider_set(&s, 10, &cfg, KnobStart::Offset(190.0)).unwrap();
        assert_eq!(plan.endpoint, s.right_endpoint());
        assert_eq!(plan.clicks, 0);
        // Knob at [280, 290): one click pushes it to the end.
        let plan = plan_slider_set(&s, 10, &cfg, KnobStart::Offset(180.0)).unwrap();
        assert_eq!(plan.clicks, 1);
        let plan = plan_slider_set(&s, 10, &cfg, KnobStart::Offset(20.0)).unwrap();
        assert_eq!(plan.endpoint, s.left_endpoint());
    }

    #[test]
    fn dense_value_range_reports_unrepresentable_values() {
        let s = SliderSpec {
            track_len: 30,
            knob_width: 10,
            page_step: 5.0,
            ..demo(5.0)
        };
        // 20 usable pixels cannot express 101 values.
        let missing = (0..=100)
            .filter(|&v| plan_slider_set(&s, v, &SliderPlanConfig::default(), KnobStart::Unknown).is_err())
            .count();
        assert!(missing > 0);
    }

    #[test]
    fn validation() {
        assert!(SliderSpec { knob_width: 200, ..demo(1.0) }.validate().is_err());
        assert!(SliderSpec { max: 0, ..demo(1.0) }.validate().is_err());
        assert!(demo(0.0).validate().is_err());
    }
}
