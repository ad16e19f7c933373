import functools
import os
import random
import traceback
import typing
from fractions import Fraction
from importlib import metadata

from probstream import __version__
from probstream.adversary import (
    BucketFoolingConfig,
    fooling_set_bits,
    gen_app_fooling_streams,
    gen_bucket_stream,
    gen_prime_family,
)
from probstream.automata import (
    Amplifier,
    AmplifierConfig,
    NaiveWindow,
    NoisyAutomaton,
    ProductApproximator,
    ThresholdAutomaton,
    WindowApproximator,
)
from probstream.buckets import PowerValue, bucket_of_value, round_fraction, within_band
from probstream.config import Config
from probstream.core import GenerationError, ParameterError, ProbstreamError, StreamingAutomaton
from probstream.numerics import Probability, Rational, exact_product
from probstream.protocols import (
    GT_STRIDE,
    IgtConfig,
    SweepReport,
    Transcript,
    gt_from_app,
    gt_from_tpp,
    igt_from_swapp,
    sweep_gt_from_app,
    sweep_gt_from_tpp,
    sweep_igt_from_swapp,
)
from probstream.serializer import DISPLAY_BITS
from probstream.streamfile import format_stream, parse_stream
from probstream.units import bits

FAMILIES = ('bucket', 'claim1', 'appfool', 'primes')
REDUCTIONS = ('gt-app', 'gt-tpp', 'igt-swapp')

#: Generated files as (name, text) pairs.
Files = typing.List[typing.Tuple[str, str]]

_configs: typing.Dict[typing.Optional[str], Config] = {}


class ProbstreamException(Exception):
    """Exception raised when probstream encounters an internal error."""


def initialize(context: typing.Optional[typing.Mapping] = None) -> Config:
    """Load and cache the configuration named by the context."""
    context = context or {}
    path = context.get('config')
    if path not in _configs:
        _configs[path] = Config.build(path)
    return _configs[path]


def make_rng(context: typing.Optional[typing.Mapping] = None) -> random.Random:
    """Return the injected random source, seeded from the environment or the configuration."""
    general = initialize(context).general
    variable = general['seed_variable']
    value = os.environ.get(variable)
    if value is None:
        return random.Random(general['seed'])
    try:
        return random.Random(int(value))
    except ValueError:
        raise ParameterError(f'{variable} must be an integer, got {value!r}')


def _setting(context: typing.Mapping, key: str) -> typing.Any:
    value = context.get(key)
    return value if value is not None else initialize(context).general[key]


def _guarded(func):
    """Let library errors through and wrap anything else in a ProbstreamException."""
    @functools.wraps(func)
    def wrapper(*args, context: typing.Optional[typing.MutableMapping] = None, **kwargs):
        context = context if context is not None else {}
        try:
            return func(*args, context=context, **kwargs)
        except ProbstreamError:
            raise
        except Exception:
            raise ProbstreamException(debug_info(context=context, exc_info=True))

    return wrapper


def _describe(value: typing.Any, digits: int, exact_bits_cap: int) -> typing.Dict[str, typing.Any]:
    info: typing.Dict[str, typing.Any] = {}
    if isinstance(value, PowerValue):
        exact: typing.Optional[Fraction] = Fraction(0) if value.zero else None
        if not value.zero:
            info.update(base=value.base, exponent=value.exponent)
            size = value.exponent * max(value.base.numerator.bit_length(), value.base.denominator.bit_length())
            if size <= DISPLAY_BITS:
                exact = value.exact(exact_bits_cap)
        decimal = value.decimal(digits, exact_bits_cap)
    else:
        exact = Fraction(value)
        decimal = round_fraction(exact, digits)
    info.update(exact=exact, decimal=decimal, inexact=exact is None or Fraction(decimal) != exact)
    return info


def _oracle(checks: typing.Mapping[str, bool], **extra) -> typing.Dict[str, typing.Any]:
    return dict(extra, checks=dict(checks), **{'pass': all(checks.values())})


@_guarded
def approx(
        stream: typing.Sequence[Rational],
        epsilon: Rational,
        n: int,
        b: int,
        context: typing.MutableMapping,
) -> typing.Mapping[str, typing.Any]:
    """Run the product approximation and report its output and space."""
    digits = _setting(context, 'digits')
    cap = _setting(context, 'exact_bits_cap')
    automaton = ProductApproximator(n, b, epsilon, exact_bits_cap=cap)
    state = automaton.run(stream)
    value = automaton.output(state)
    space = automaton.space_report(state)
    report: typing.Dict[str, typing.Any] = {
        'algorithm': 'approx',
        'parameters': {'n': n, 'b': b, 'epsilon': Fraction(epsilon), 'elements': len(stream)},
        'output': _describe(value, digits, cap),
        'space': {
            'serialized': bits(space.serialized_bits, context),
            'index_sum': bits(space.index_bits, context),
            'formula': bits(space.formula_bits, context),
            'index_bound': space.index_bound,
            'sum_bound': space.sum_bound,
        },
    }
    if context.get('oracle'):
        product = exact_product(stream)
        indices = [automaton.element_index(q) for q in stream if q != 0]
        checks = {
            'band': within_band(value, product, epsilon, cap),
            'index_bound': all(index <= space.index_bound for index in indices),
            'sum_bound': state.index_sum <= space.sum_bound,
            'space': space.index_bits <= space.formula_bits,
        }
        report['oracle'] = _oracle(checks, product=_describe(product, digits, cap))
    return report


@_guarded
def threshold(
        stream: typing.Sequence[Rational],
        n: int,
        b: int,
        context: typing.MutableMapping,
        mode: str = 'primes',
        copies: typing.Optional[int] = None,
        noise: typing.Optional[Rational] = None,
) -> typing.Mapping[str, typing.Any]:
    """Decide whether the product after the first element is below it.

    With ``noise`` or ``copies`` the decision comes from a majority of noisy copies seeded by the
    injected random source.
    """
    if not stream:
        raise ParameterError('threshold stream is empty')
    automaton = ThresholdAutomaton(n, b, mode)
    state = automaton.run(stream)
    runner: StreamingAutomaton = automaton
    if noise is not None or copies is not None:
        rng = make_rng(context)
        runner = NoisyAutomaton(automaton, noise if noise is not None else 0, rng)
        amplifier = initialize(context).amplifier
        config = AmplifierConfig.build(copies if copies is not None else amplifier['copies'], amplifier['mode'])
        runner = Amplifier(runner, config, rng)
        decision = bool(runner.evaluate(stream))
    else:
        decision = automaton.output(state)

    space = automaton.space_report(state)
    report: typing.Dict[str, typing.Any] = {
        'algorithm': 'threshold',
        'automaton': runner.name,
        'parameters': {'n': n, 'b': b, 'mode': mode, 'elements': len(stream) - 1},
        'threshold': stream[0],
        'decision': int(decision),
        'early_exit': state.early_exit,
        'saw_zero': state.saw_zero,
        'space': {
            'serialized': bits(space.serialized_bits, context),
            'storeall': bits(space.storeall_bits, context),
            'tracked_primes': space.tracked_primes,
            'exponent_bound': space.exponent_bound,
            'effective_n': space.effective_n,
            'early_exit_count': space.early_exit_count,
            'prime_count_estimate': round(space.prime_count_estimate, 3),
        },
    }
    if context.get('oracle'):
        t = Fraction(stream[0])
        product = exact_product(stream[1:])
        checks = {'decision': decision == (product < t)}
        if state.early_exit and t >= Fraction(1, 1 << b):
            checks['early_exit'] = product < t
        report['oracle'] = _oracle(checks, product=product, expected=int(product < t))
    return report


@_guarded
def window(
        stream: typing.Sequence[Rational],
        epsilon: Rational,
        m: int,
        b: int,
        context: typing.MutableMapping,
) -> typing.Mapping[str, typing.Any]:
    """Run the sliding window approximation, optionally tracing and checking every step."""
    digits = _setting(context, 'digits')
    cap = _setting(context, 'exact_bits_cap')
    trace = context.get('trace')
    oracle = context.get('oracle')
    automaton = WindowApproximator(m, b, epsilon, exact_bits_cap=cap)
    naive = NaiveWindow(m, b)
    state, exact_state = automaton.initial_state(), naive.initial_state()
    steps = []
    failed = []
    for t, q in enumerate(stream, start=1):
        state = automaton.step(state, q)
        value = automaton.output(state)
        step: typing.Dict[str, typing.Any] = {'t': t, 'element': q}
        if oracle:
            exact_state = naive.step(exact_state, q)
            step['window'] = naive.output(exact_state)
            step['pass'] = within_band(value, step['window'], epsilon, cap)
            if not step['pass']:
                failed.append(t)
        if trace:
            described = _describe(value, digits, cap)
            step.update(exponent=described.get('exponent'), output=described['exact'], decimal=described['decimal'])
            steps.append(step)

    space = automaton.space_report(state)
    report: typing.Dict[str, typing.Any] = {
        'algorithm': 'window',
        'parameters': {'m': m, 'b': b, 'epsilon': Fraction(epsilon), 'elements': len(stream)},
        'steps': steps or None,
        'output': _describe(automaton.output(state), digits, cap),
        'space': {
            'serialized': bits(space.serialized_bits, context),
            'slot_width': bits(space.slot_width, context),
            'formula': bits(space.formula_bits, context),
            'naive': bits(naive.formula_bits, context),
            'index_bound': space.index_bound,
        },
    }
    if oracle:
        checks = {
            'band': not failed,
            'index_bound': all(index is None or index <= space.index_bound for index in state.indices),
            'space': space.serialized_bits <= space.formula_bits,
        }
        report['oracle'] = _oracle(checks, product=naive.output(exact_state), failed_steps=failed or None)
    return report


def _verify_files(files: Files, products: typing.Sequence[Fraction]) -> None:
    for (name, text), product in zip(files, products):
        parsed = parse_stream(text.splitlines())
        if exact_product(parsed.elements) != product:
            raise GenerationError(f'{name} does not parse back to a stream of product {product}')


def _bucket_family(
        epsilon: Rational,
        b: int,
        n: int,
        j: int,
        context: typing.Mapping,
) -> typing.Tuple[typing.Dict[str, typing.Any], Files]:
    cap = _setting(context, 'exact_bits_cap')
    cfg = BucketFoolingConfig.build(epsilon, b, n)
    stream = gen_bucket_stream(cfg, j, cap)
    product = exact_product(stream)
    bucket = bucket_of_value(product, cfg.one_minus_eps, cap)
    if bucket != j:
        raise GenerationError(f'stream product lies in bucket {bucket}, not {j}')
    files = [(f'bucket-{j:04d}.txt', format_stream(stream))]
    _verify_files(files, [product])
    report = {
        'family': 'bucket',
        'parameters': {'epsilon': cfg.epsilon, 'b': b, 'n': n, 'j': j},
        'k': cfg.k,
        'y': cfg.y,
        'alphabet': list(cfg.alphabet),
        'length': len(stream),
        'max_stream_length': cfg.max_stream_length,
        'product': product,
        'bucket': bucket,
    }
    return report, files


def _appfool_family(
        epsilon: Rational,
        b: int,
        n: int,
        stride: int,
        context: typing.Mapping,
) -> typing.Tuple[typing.Dict[str, typing.Any], Files]:
    cap = _setting(context, 'exact_bits_cap')
    cfg = BucketFoolingConfig.build(epsilon, b, n)
    streams = gen_app_fooling_streams(cfg, stride, cap)
    files = [(f'appfool-{i:04d}.txt', format_stream(stream)) for i, stream in enumerate(streams)]
    _verify_files(files, [exact_product(stream) for stream in streams])
    report = {
        'family': 'appfool',
        'parameters': {'epsilon': cfg.epsilon, 'b': b, 'n': n, 'stride': stride},
        'k': cfg.k,
        'y': cfg.y,
        'streams': len(streams),
        'longest': max(len(stream) for stream in streams),
        'max_stream_length': cfg.max_stream_length,
        'fooling_set_bits': bits(fooling_set_bits(cfg, stride), context),
    }
    return report, files


def _prime_family(
        n: int,
        b: int,
        gamma: Rational,
        context: typing.Mapping,
) -> typing.Tuple[typing.Dict[str, typing.Any], Files]:
    fam = gen_prime_family(n, b, gamma, _setting(context, 'enumeration_cap'))
    words = fam.words()
    files: Files = []
    products = []
    for rank, word in enumerate(words, start=1):
        suffix = tuple(Probability(s / r) for s, r in zip(fam.suffix_numbers, word))
        if exact_product(word) * exact_product(suffix) != fam.threshold:
            raise GenerationError(f'suffix of word {rank} does not restore the threshold')
        files.append((f'primes-{rank:04d}.txt', format_stream(word, threshold=fam.threshold)))
        files.append((f'suffix-{rank:04d}.txt', format_stream(suffix)))
        products.extend([exact_product(word), exact_product(suffix)])
    _verify_files(files, products)
    report = {
        'family': 'primes',
        'parameters': {'n': n, 'b': b, 'gamma': fam.gamma},
        'threshold': fam.threshold,
        'blocks': [list(block) for block in fam.blocks],
        'suffix_numbers': list(fam.suffix_numbers),
        'words': fam.size,
        'largest_prime': fam.largest_prime,
        'max_bit_size': fam.max_bit_size,
        'prime_bits': fam.prime_bits,
        'bit_budget_holds': fam.bit_budget_holds,
    }
    return report, files


@_guarded
def generate(
        family: str,
        context: typing.MutableMapping,
        epsilon: typing.Optional[Rational] = None,
        n: int = 1,
        b: int = 1,
        j: int = 0,
        stride: int = GT_STRIDE,
        gamma: typing.Optional[Rational] = None,
) -> typing.Tuple[typing.Mapping[str, typing.Any], Files]:
    """Generate an adversarial family, verify it and render its stream files."""
    if family not in FAMILIES:
        raise ParameterError(f'unknown family {family!r}, expected one of {", ".join(FAMILIES)}')
    if family == 'primes':
        return _prime_family(n, b, gamma if gamma is not None else initialize(context).adversary['gamma'], context)
    if epsilon is None:
        raise ParameterError(f'family {family} needs epsilon')
    if family == 'appfool':
        return _appfool_family(epsilon, b, n, stride, context)
    return _bucket_family(epsilon, b, n, j, context)


def _transcript_report(transcript: Transcript, context: typing.Mapping) -> typing.Dict[str, typing.Any]:
    return {
        'alice': transcript.alice_input,
        'bob': transcript.bob_input,
        'message': transcript.message or None,
        'message_bits': bits(transcript.message_bits, context),
        'bob_outputs': [str(output) for output in transcript.bob_outputs],
        'decision': int(transcript.decision),
        'expected': int(transcript.expected),
        'correct': transcript.correct,
    }


def _sweep_report(sweep: SweepReport, context: typing.Mapping) -> typing.Dict[str, typing.Any]:
    report: typing.Dict[str, typing.Any] = {
        'instances': sweep.instances,
        'correct': sweep.correct,
        'accuracy': sweep.accuracy,
        'max_bits': bits(sweep.max_bits, context),
        'mean_bits': sweep.mean_bits,
        'reference_bits': round(sweep.reference_bits, 3),
    }
    if context.get('trace'):
        report['transcripts'] = [
            {
                'alice': t.alice_input,
                'bob': t.bob_input,
                'bits': t.message_bits,
                'decision': int(t.decision),
                'expected': int(t.expected),
            }
            for t in sweep.transcripts
        ]
    return report


@_guarded
def protocol(
        reduction: str,
        context: typing.MutableMapping,
        epsilon: typing.Optional[Rational] = None,
        n: int = 1,
        m: int = 1,
        b: int = 1,
        i: typing.Optional[int] = None,
        j: typing.Optional[int] = None,
        a: typing.Optional[Rational] = None,
        alice: typing.Sequence[Rational] = (),
        mode: str = 'primes',
        naive: bool = False,
        sweep: bool = False,
) -> typing.Mapping[str, typing.Any]:
    """Simulate one run of a reduction, or every input of it with ``sweep``."""
    if reduction not in REDUCTIONS:
        raise ParameterError(f'unknown reduction {reduction!r}, expected one of {", ".join(REDUCTIONS)}')
    if reduction != 'gt-tpp' and epsilon is None:
        raise ParameterError(f'reduction {reduction} needs epsilon')
    rng = make_rng(context)
    workers = _setting(context, 'workers')
    cap = _setting(context, 'exact_bits_cap')
    if not sweep:
        inputs = {'i': i, 'a': a} if reduction == 'igt-swapp' else {'i': i, 'j': j}
        missing = [name for name, value in inputs.items() if value is None]
        if missing:
            raise ParameterError(f'a single {reduction} run needs {" and ".join(missing)}')

    automaton: StreamingAutomaton
    parameters: typing.Dict[str, typing.Any]
    if reduction == 'gt-app':
        cfg = BucketFoolingConfig.build(epsilon, b, n)
        automaton = ProductApproximator(cfg.max_stream_length, b, cfg.epsilon, exact_bits_cap=cap)
        parameters = {'epsilon': cfg.epsilon, 'b': b, 'n': n, 'y': cfg.y, 'stride': GT_STRIDE}
        result = (sweep_gt_from_app(automaton, cfg, rng, workers) if sweep
                  else gt_from_app(automaton, cfg, i, j, rng))
    elif reduction == 'gt-tpp':
        fam = gen_prime_family(n, b, initialize(context).adversary['gamma'], _setting(context, 'enumeration_cap'))
        automaton = ThresholdAutomaton(2 * fam.n, fam.max_bit_size, mode)
        parameters = {'n': n, 'b': b, 'words': fam.size, 'threshold': fam.threshold}
        result = (sweep_gt_from_tpp(automaton, fam, rng, workers) if sweep
                  else gt_from_tpp(automaton, fam, i, j, rng))
    else:
        igt = IgtConfig.build(epsilon, m, b)
        automaton = NaiveWindow(m, b) if naive else WindowApproximator(m, b, igt.epsilon, exact_bits_cap=cap)
        parameters = {'epsilon': igt.epsilon, 'm': m, 'b': b, 'alpha': igt.alpha, 'c': igt.c,
                      'alphabet': list(igt.alphabet)}
        result = (sweep_igt_from_swapp(automaton, igt, rng, workers) if sweep
                  else igt_from_swapp(automaton, igt, alice, i, a, rng))

    report: typing.Dict[str, typing.Any] = {
        'reduction': reduction,
        'automaton': automaton.name,
        'parameters': parameters,
    }
    if isinstance(result, SweepReport):
        report['sweep'] = _sweep_report(result, context)
        failures = [t for t in result.transcripts if not t.correct]
        report['oracle'] = _oracle({'decisions': not failures}, failures=len(failures))
    else:
        report['transcript'] = _transcript_report(result, context)
        report['oracle'] = _oracle({'decision': result.correct})
    return report


def dependencies(context: typing.Optional[typing.Mapping] = None) -> typing.Mapping:
    """Return the versions of the packages probstream relies on."""
    deps: typing.Dict[str, typing.Optional[str]] = {}
    for name in ('pint', 'PyYAML'):
        try:
            deps[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            deps[name] = None

    return deps


def _centered(value: str) -> str:
    value = value[-52:]
    return f'| {value:^53} |'


def debug_info(
        context: typing.Optional[typing.MutableMapping] = None,
        exc_info: bool = False,
) -> str:
    lines = [
        '+-------------------------------------------------------+',
        _centered(f'probstream {__version__}'),
        '+-------------------------------------------------------+'
    ]

    for name, version in dependencies(context).items():
        lines.append(_centered(f'{name}: {version or "not installed"}'))

    if context:
        lines.append('+-------------------------------------------------------+')
        for k, v in context.items():
            if v:
                lines.append(_centered(f'{k}: {v}'))

    if exc_info:
        lines.append('+-------------------------------------------------------+')
        lines.append(traceback.format_exc())

    lines.append('+-------------------------------------------------------+')
    lines.append(_centered('Please attach this block to any bug report.'))
    lines.append('+-------------------------------------------------------+')

    return '\n'.join(lines)
