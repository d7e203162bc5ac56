//! Ehlers' Hilbert-transform dominant-cycle family, following the
//! open-source TA-Lib reference implementation step for step (including its
//! 63-bar lookback, the 4-3-2-1 weighted price smoother and the odd/even
//! bar filter banks) so outputs agree with that library to rounding.

/// Bars consumed before the first defined output.
pub const LOOKBACK: usize = 63;

const SMOOTH_PRICE_SIZE: usize = 50;
const A: f64 = 0.0962;
const B: f64 = 0.5769;

/// Per-bar outputs of the dominant-cycle engine. Entries before
/// [`LOOKBACK`] are NaN.
#[derive(Debug, Clone, Default)]
pub struct HilbertOutputs {
    /// Dominant cycle phase in degrees.
    pub dc_phase: Vec<f64>,
    pub sine: Vec<f64>,
    pub lead_sine: Vec<f64>,
    /// 1 for trend mode, 0 for cycle mode.
    pub trend_mode: Vec<f64>,
}

#[derive(Default)]
struct HilbertFilter {
    odd: [f64; 3],
    even: [f64; 3],
    prev_odd: f64,
    prev_even: f64,
    prev_input_odd: f64,
    prev_input_even: f64,
}

impl HilbertFilter {
    fn step(&mut self, input: f64, idx: usize, even: bool, adjusted_prev_period: f64) -> f64 {
        let (buf, prev, prev_input) = if even {
            (&mut self.even, &mut self.prev_even, &mut self.prev_input_even)
        } else {
            (&mut self.odd, &mut self.prev_odd, &mut self.prev_input_odd)
        };
        let scaled = A * input;
        let mut v = -buf[idx];
        buf[idx] = scaled;
        v += scaled;
        v -= *prev;
        *prev = B * *prev_input;
        v += *prev;
        *prev_input = input;
        v *= adjusted_prev_period;
        v
    }
}

/// Runs the dominant-cycle engine over `price`. Series shorter than
/// `LOOKBACK + 1` produce all-NaN outputs.
pub fn dominant_cycle(price: &[f64]) -> HilbertOutputs {
    let n = price.len();
    let mut out = HilbertOutputs {
        dc_phase: vec![f64::NAN; n],
        sine: vec![f64::NAN; n],
        lead_sine: vec![f64::NAN; n],
        trend_mode: vec![f64::NAN; n],
    };
    if n <= LOOKBACK {
        return out;
    }

    let rad2deg = 45.0 / 1f64.atan();
    let deg2rad = 1.0 / rad2deg;
    let two_pi = 1f64.atan() * 8.0;

    // 4-3-2-1 weighted moving average of price, seeded on the first bars.
    let mut today = 0usize;
    let mut trailing_idx = 0usize;
    let mut wma_sub = price[0] + price[1] + price[2];
    let mut wma_sum = price[0] + price[1] * 2.0 + price[2] * 3.0;
    today += 3;
    let mut trailing_value = 0.0;
    let mut price_wma = |new_price: f64| {
        wma_sub += new_price;
        wma_sub -= trailing_value;
        wma_sum += new_price * 4.0;
        trailing_value = price[trailing_idx];
        trailing_idx += 1;
        let smoothed = wma_sum * 0.1;
        wma_sum -= wma_sub;
        smoothed
    };
    for _ in 0..34 {
        price_wma(price[today]);
        today += 1;
    }

    let mut hilbert_idx = 0usize;
    let mut detrender = HilbertFilter::default();
    let mut q1 = HilbertFilter::default();
    let mut ji = HilbertFilter::default();
    let mut jq = HilbertFilter::default();

    let mut period = 0.0f64;
    let (mut prev_i2, mut prev_q2) = (0.0f64, 0.0f64);
    let (mut re, mut im) = (0.0f64, 0.0f64);
    let (mut i1_odd_prev3, mut i1_even_prev3) = (0.0f64, 0.0f64);
    let (mut i1_odd_prev2, mut i1_even_prev2) = (0.0f64, 0.0f64);
    let mut smooth_period = 0.0f64;
    let mut smooth_price = [0.0f64; SMOOTH_PRICE_SIZE];
    let mut smooth_idx = 0usize;

    let mut dc_phase = 0.0f64;
    let (mut sine, mut lead_sine) = (0.0f64, 0.0f64);
    let (mut i_trend1, mut i_trend2, mut i_trend3) = (0.0f64, 0.0f64, 0.0f64);
    let mut days_in_trend = 0i64;

    while today < n {
        let adjusted_prev_period = 0.075 * period + 0.54;
        let smoothed = price_wma(price[today]);
        smooth_price[smooth_idx] = smoothed;

        let (q2, i2);
        if today.is_multiple_of(2) {
            let d = detrender.step(smoothed, hilbert_idx, true, adjusted_prev_period);
            let q = q1.step(d, hilbert_idx, true, adjusted_prev_period);
            let j_i = ji.step(i1_even_prev3, hilbert_idx, true, adjusted_prev_period);
            let j_q = jq.step(q, hilbert_idx, true, adjusted_prev_period);
            hilbert_idx += 1;
            if hilbert_idx == 3 {
                hilbert_idx = 0;
            }
            q2 = 0.2 * (q + j_i) + 0.8 * prev_q2;
            i2 = 0.2 * (i1_even_prev3 - j_q) + 0.8 * prev_i2;
            i1_odd_prev3 = i1_odd_prev2;
            i1_odd_prev2 = d;
        } else {
            let d = detrender.step(smoothed, hilbert_idx, false, adjusted_prev_period);
            let q = q1.step(d, hilbert_idx, false, adjusted_prev_period);
            let j_i = ji.step(i1_odd_prev3, hilbert_idx, false, adjusted_prev_period);
            let j_q = jq.step(q, hilbert_idx, false, adjusted_prev_period);
            q2 = 0.2 * (q + j_i) + 0.8 * prev_q2;
            i2 = 0.2 * (i1_odd_prev3 - j_q) + 0.8 * prev_i2;
            i1_even_prev3 = i1_even_prev2;
            i1_even_prev2 = d;
        }

        re = 0.2 * (i2 * prev_i2 + q2 * prev_q2) + 0.8 * re;
        im = 0.2 * (i2 * prev_q2 - q2 * prev_i2) + 0.8 * im;
        prev_q2 = q2;
        prev_i2 = i2;
        let last_period = period;
        if im != 0.0 && re != 0.0 {
            period = 360.0 / ((im / re).atan() * rad2deg);
        }
        if period > 1.5 * last_period {
            period = 1.5 * last_period;
        }
        if period < 0.67 * last_period {
            period = 0.67 * last_period;
        }
        period = period.clamp(6.0, 50.0);
        period = 0.2 * period + 0.8 * last_period;
        smooth_period = 0.33 * period + 0.67 * smooth_period;

        // Dominant cycle phase from a DFT over the last `dc_period` bars.
        let prev_dc_phase = dc_phase;
        let dc_period = (smooth_period + 0.5) as usize;
        let (mut real_part, mut imag_part) = (0.0f64, 0.0f64);
        let mut idx = smooth_idx;
        for i in 0..dc_period {
            let angle = (i as f64 * two_pi) / dc_period as f64;
            real_part += angle.sin() * smooth_price[idx];
            imag_part += angle.cos() * smooth_price[idx];
            idx = if idx == 0 { SMOOTH_PRICE_SIZE - 1 } else { idx - 1 };
        }
        if imag_part.abs() > 0.0 {
            dc_phase = (real_part / imag_part).atan() * rad2deg;
        } else if real_part < 0.0 {
            dc_phase -= 90.0;
        } else if real_part > 0.0 {
            dc_phase += 90.0;
        }
        dc_phase += 90.0;
        // One-bar lag of the weighted smoother.
        dc_phase += 360.0 / smooth_period;
        if imag_part < 0.0 {
            dc_phase += 180.0;
        }
        if dc_phase > 315.0 {
            dc_phase -= 360.0;
        }

        let (prev_sine, prev_lead_sine) = (sine, lead_sine);
        sine = (dc_phase * deg2rad).sin();
        lead_sine = ((dc_phase + 45.0) * deg2rad).sin();

        // Instantaneous trendline over the dominant cycle.
        let mut avg = 0.0;
        if dc_period > 0 {
            let lo = (today + 1).saturating_sub(dc_period);
            for p in price[lo..=today].iter().rev() {
                avg += p;
            }
            avg /= dc_period as f64;
        }
        let trendline = (4.0 * avg + 3.0 * i_trend1 + 2.0 * i_trend2 + i_trend3) / 10.0;
        i_trend3 = i_trend2;
        i_trend2 = i_trend1;
        i_trend1 = avg;

        let mut trend = 1.0;
        if (sine > lead_sine && prev_sine <= prev_lead_sine)
            || (sine < lead_sine && prev_sine >= prev_lead_sine)
        {
            days_in_trend = 0;
            trend = 0.0;
        }
        days_in_trend += 1;
        if (days_in_trend as f64) < 0.5 * smooth_period {
            trend = 0.0;
        }
        let phase_step = dc_phase - prev_dc_phase;
        if smooth_period != 0.0
            && phase_step > 0.67 * 360.0 / smooth_period
            && phase_step < 1.5 * 360.0 / smooth_period
        {
            trend = 0.0;
        }
        let sp = smooth_price[smooth_idx];
        if trendline != 0.0 && ((sp - trendline) / trendline).abs() >= 0.015 {
            trend = 1.0;
        }

        if today >= LOOKBACK {
            out.dc_phase[today] = dc_phase;
            out.sine[today] = sine;
            out.lead_sine[today] = lead_sine;
            out.trend_mode[today] = trend;
        }

        smooth_idx += 1;
        if smooth_idx == SMOOTH_PRICE_SIZE {
            smooth_idx = 0;
        }
        today += 1;
    }
    out
}
