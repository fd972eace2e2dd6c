use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use teleop_core::netsim::{parse_profile, sample_delay, DelayProfile, DelayRow, Pipe, Transmit};
use teleop_core::wire::ChannelClass;

#[test]
fn anchor_rows_hold_their_statistics() {
    let profile = DelayProfile::field_trial();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (size, min, avg, max, tol) in [(100, 79.0, 103.0, 189.0, 5.0), (2000, 149.0, 255.0, 410.0, 10.0)] {
        let d: Vec<f64> = (0..10_000).map(|_| sample_delay(size, &profile, &mut rng)).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!((mean - avg).abs() <= tol, "size {size}: mean {mean}");
        assert!(d.iter().all(|x| (min..=max).contains(x)));
    }
}

#[test]
fn degenerate_row_is_exact() {
    let profile = DelayProfile {
        rows: vec![DelayRow::new(500, 129.0, 129.0, 129.0)],
        ..DelayProfile::field_trial()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!((0..1000).all(|_| sample_delay(500, &profile, &mut rng) == 129.0));
}

#[test]
fn lossless_link_delivers_every_send() {
    let mut pipe = Pipe::new(DelayProfile::field_trial()).unwrap();
    for t in 0..1000u64 {
        pipe.transmit(t * 10, ChannelClass::Telemetry, 500, t);
    }
    assert_eq!(pipe.poll(1_000_000).len(), 1000);
}

#[test]
fn ten_percent_loss_is_binomial() {
    let profile = DelayProfile {
        loss_rate: 0.1,
        seed: 5,
        ..DelayProfile::field_trial()
    };
    let mut pipe = Pipe::new(profile).unwrap();
    for t in 0..10_000u64 {
        pipe.transmit(t, ChannelClass::Telemetry, 500, t);
    }
    let got = pipe.poll(u64::MAX).len();
    // sd of Bin(10000, 0.9) is 30
    assert!((8800..=9200).contains(&got), "{got} delivered");
}

#[test]
fn heartbeat_inside_a_window_is_never_delivered() {
    let mut pipe = Pipe::new(DelayProfile::field_trial()).unwrap();
    pipe.schedule_interruption(10_000, 10_000).unwrap();
    assert!(matches!(
        pipe.transmit(12_000, ChannelClass::Telemetry, 60, "hb"),
        Transmit::Dropped(_)
    ));
    assert!(pipe.poll(u64::MAX).is_empty());
}

#[test]
fn no_datagrams_arrive_inside_a_window() {
    let mut pipe = Pipe::new(DelayProfile::field_trial()).unwrap();
    pipe.schedule_interruption(10_000, 10_000).unwrap();
    for t in (0..30_000u64).step_by(10) {
        pipe.transmit(t, ChannelClass::Telemetry, 500, t);
        pipe.transmit(t, ChannelClass::Media, 5000, t);
    }
    for (at, sent) in pipe.poll_timed(u64::MAX) {
        assert!(!(10_000.0..20_000.0).contains(&at), "sent {sent} arrived at {at}");
        assert!(!(10_000..20_000).contains(&sent));
    }
}

#[test]
fn stream_message_waits_out_the_window_in_order() {
    let mut pipe = Pipe::new(DelayProfile::field_trial()).unwrap();
    pipe.schedule_interruption(10_000, 10_000).unwrap();
    pipe.transmit(15_000, ChannelClass::AdminCommand, 20, "first");
    pipe.transmit(15_010, ChannelClass::AdminCommand, 20, "second");
    assert!(pipe.poll(19_999).is_empty());
    let got = pipe.poll_timed(u64::MAX);
    assert_eq!(got.iter().map(|g| g.1).collect::<Vec<_>>(), vec!["first", "second"]);
    assert!(got.iter().all(|g| g.0 >= 20_000.0));
}

#[test]
fn overlapping_windows_are_rejected() {
    let mut pipe: Pipe<()> = Pipe::new(DelayProfile::field_trial()).unwrap();
    pipe.schedule_interruption(10_000, 10_000).unwrap();
    assert!(pipe.schedule_interruption(15_000, 1000).is_err());
    assert!(pipe.schedule_interruption(20_000, 1000).is_ok());
}

#[test]
fn profile_file_in_the_repo_matches_the_builtin_table() {
    let text = include_str!("../scenarios/field_trial.profile");
    let file = parse_profile(text).unwrap();
    assert_eq!(file.profile, DelayProfile::field_trial());
    assert!(file.interruptions.is_empty());
}

fn class() -> impl Strategy<Value = ChannelClass> {
    prop_oneof![
        Just(ChannelClass::AdminCommand),
        Just(ChannelClass::Telemetry),
        Just(ChannelClass::Media)
    ]
}

proptest! {
    #[test]
    fn delays_stay_inside_the_envelope(size in 1usize..5000, seed in any::<u64>()) {
        let profile = DelayProfile::field_trial();
        let (min, _, max) = profile.envelope(size);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let d = sample_delay(size, &profile, &mut rng);
            prop_assert!(d >= min && d <= max, "{} outside [{}, {}]", d, min, max);
        }
    }

    #[test]
    fn same_seed_same_delivery_trace(
        seed in any::<u64>(),
        sends in prop::collection::vec((0u64..20_000, class(), 10usize..3000), 1..100),
    ) {
        let profile = DelayProfile { loss_rate: 0.05, reorder_rate: 0.1, seed, ..DelayProfile::field_trial() };
        let run = || {
            let mut pipe = Pipe::new(profile.clone()).unwrap();
            pipe.schedule_interruption(5000, 3000).unwrap();
            let mut sorted = sends.clone();
            sorted.sort_by_key(|s| s.0);
            for (i, (t, c, n)) in sorted.into_iter().enumerate() {
                pipe.transmit(t, c, n, i);
            }
            pipe.poll_timed(u64::MAX).into_iter().map(|(at, i)| (at.to_bits(), i)).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn stream_is_lossless_and_ordered(
        times in prop::collection::vec(0u64..30_000, 1..200),
        window in prop::option::of((0u64..20_000, 1u64..10_000)),
    ) {
        let profile = DelayProfile { loss_rate: 0.3, reorder_rate: 0.5, ..DelayProfile::field_trial() };
        let mut pipe = Pipe::new(profile).unwrap();
        if let Some((start, len)) = window {
            pipe.schedule_interruption(start, len).unwrap();
        }
        let mut times = times;
        times.sort_unstable();
        for (i, t) in times.iter().enumerate() {
            pipe.transmit(*t, ChannelClass::AdminCommand, 40, i);
        }
        let got: Vec<usize> = pipe.poll(u64::MAX);
        prop_assert_eq!(got, (0..times.len()).collect::<Vec<_>>());
    }
}
