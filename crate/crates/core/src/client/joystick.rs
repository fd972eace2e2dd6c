//! Ten-bit joystick axes to a twist.

use crate::wire::JoystickAxes;
use crate::world::Twist;

pub const AXIS_CENTER: i32 = 512;
pub const AXIS_DEADZONE: i32 = 16;

/// Maps one axis count to [-1, 1]. Counts within the deadzone give 0; the
/// live range on each side is scaled so that 0 and 1023 reach full scale.
pub fn axis_unit(count: u16) -> f64 {
    let offset = i32::from(count.min(crate::wire::JOYSTICK_MAX)) - AXIS_CENTER;
    if offset.abs() <= AXIS_DEADZONE {
        return 0.0;
    }
    if offset > 0 {
        // 513..=1023
        f64::from(offset - AXIS_DEADZONE) / f64::from(511 - AXIS_DEADZONE)
    } else {
        // 0..=511
        -f64::from(-offset - AXIS_DEADZONE) / f64::from(512 - AXIS_DEADZONE)
    }
}

/// Vertical drives `v` in [-v_limit, v_limit]; horizontal drives `w`, with
/// pushes to the right (counts above centre) turning clockwise.
pub fn map_joystick(axes: &JoystickAxes, v_limit: f64, w_max: f64) -> Twist {
    Twist {
        v: v_limit * axis_unit(axes.vertical),
        w: -w_max * axis_unit(axes.horizontal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn axes(h: u16, v: u16) -> JoystickAxes {
        JoystickAxes {
            session: 1,
            seq: 1,
            horizontal: h,
            vertical: v,
            buttons: 0,
        }
    }

    #[test]
    fn examples() {
        assert_eq!(map_joystick(&axes(512, 512), 1.5, 1.0), Twist::ZERO);
        assert_eq!(map_joystick(&axes(512, 1023), 1.5, 1.0).v, 1.5);
        assert_eq!(map_joystick(&axes(512, 0), 1.5, 1.0).v, -1.5);
        let v = map_joystick(&axes(512, 767), 1.5, 1.0).v;
        assert!((v - 1.5 * 239.0 / 495.0).abs() < 1e-12);
        assert!((v - 0.724).abs() < 5e-4);
        assert!(map_joystick(&axes(1023, 512), 1.5, 1.0).w < 0.0);
    }

    proptest! {
        #[test]
        fn range_and_near_odd_symmetry(k in 0i32..=511, limit in 0.1f64..2.0) {
            let up = limit * axis_unit((512 + k) as u16);
            let down = limit * axis_unit((512 - k) as u16);
            prop_assert!(up.abs() <= limit && down.abs() <= limit);
            // the two halves differ by one count of span (495 vs 496)
            prop_assert!((up + down).abs() <= limit / 496.0 + 1e-12);
        }

        #[test]
        fn monotone_and_continuous(c in 0u16..1023) {
            let a = axis_unit(c);
            let b = axis_unit(c + 1);
            prop_assert!(b >= a);
            prop_assert!(b - a <= 1.0 / 495.0 + 1e-12);
        }
    }
}
