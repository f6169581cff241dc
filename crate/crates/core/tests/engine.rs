use bedflow::sim::{BedResource, EventCalendar, Freed, TimeWeighted};
use bedflow::{Accumulator, Calendar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

#[derive(Debug, Clone, Copy)]
enum Ev {
    Arrive,
    Depart,
}

/// M/M/1 with arrival rate 0.5 and unit service: L = rho / (1 - rho) = 1.
#[test]
fn mm1_mean_number_in_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let inter = Exp::new(0.5).unwrap();
    let service = Exp::new(1.0).unwrap();
    let mut cal: Calendar<Ev> = EventCalendar::new();
    let mut server = BedResource::<()>::new(1);
    let mut in_system: Accumulator = TimeWeighted::new(0.0, 0.0);
    let mut n = 0u32;

    cal.schedule(inter.sample(&mut rng), Ev::Arrive).unwrap();
    while cal.processed() < 1_000_000 {
        let (t, ev) = cal.pop_until(f64::INFINITY).unwrap();
        match ev {
            Ev::Arrive => {
                n += 1;
                if server.seize_or_enqueue(()).is_some() {
                    cal.schedule(t + service.sample(&mut rng), Ev::Depart).unwrap();
                }
                cal.schedule(t + inter.sample(&mut rng), Ev::Arrive).unwrap();
            }
            Ev::Depart => {
                n -= 1;
                if let Freed::HandedToQueue(()) = server.release().unwrap() {
                    cal.schedule(t + service.sample(&mut rng), Ev::Depart).unwrap();
                }
            }
        }
        in_system.update(t, f64::from(n)).unwrap();
        assert!(server.invariants_hold());
    }
    let l = in_system.mean_until(cal.now()).unwrap();
    assert!((l - 1.0).abs() < 0.05, "L = {l}");
}

#[test]
fn f32_calendar_orders_events() {
    let mut cal = EventCalendar::<f32, u8>::new();
    cal.schedule(2.5, 2).unwrap();
    cal.schedule(0.5, 0).unwrap();
    cal.schedule(1.5, 1).unwrap();
    let mut seen = Vec::new();
    cal.run_until(10.0, |_, _, e| seen.push(e));
    assert_eq!(seen, vec![0, 1, 2]);
    assert_eq!(cal.now(), 10.0);
}
