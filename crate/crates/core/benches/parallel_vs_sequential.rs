use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mhdlab::convolution::{free_convolve, GammaKernel};
use mhdlab::experiments::{make_divfree, DataSpec};
use mhdlab::kernels::{sample_kernel, KernelFamily};
use mhdlab::solver::{step_duhamel, MhdState, SolverConfig};
use mhdlab::{GridSpec, ScalarField};

/// Runs `f` on the default pool and on a single-thread pool.
fn both<F: Fn() + Sync>(c: &mut Criterion, group: &str, f: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("pool", "default"), |b| b.iter(&f));
    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        g.bench_function(BenchmarkId::new("pool", "single"), |b| {
            b.iter(|| single.install(&f))
        });
    }
    g.finish();
}

fn convolution(c: &mut Criterion) {
    let grid = GridSpec::new(2, 256, 16.0).unwrap();
    let kernel = GammaKernel::new(0.5, 3.0, &grid).unwrap();
    let f = ScalarField::from_fn(grid, |x| (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-1.5));
    both(c, "free_convolve_256", || {
        free_convolve(kernel.samples(), &f).unwrap();
    });
}

fn kernel_sampling(c: &mut Criterion) {
    let grid = GridSpec::new(2, 256, 32.0).unwrap();
    both(c, "sample_kernel_F_256", || {
        sample_kernel(KernelFamily::F, 1.0, &grid).unwrap();
    });
}

fn solver_step(c: &mut Criterion) {
    let grid = GridSpec::new(2, 128, 16.0).unwrap();
    let u = make_divfree(&grid, &DataSpec::dipole(0.5)).unwrap();
    let state = MhdState {
        b: u.scale(0.5),
        u,
        t: 0.0,
    };
    let cfg = SolverConfig::default();
    both(c, "duhamel_step_128", || {
        step_duhamel(&state, 0.05, &cfg).unwrap();
    });
}

criterion_group!(benches, convolution, kernel_sampling, solver_step);
criterion_main!(benches);
