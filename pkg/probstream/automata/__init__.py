from probstream.automata.amplifier import Amplifier, AmplifierConfig
from probstream.automata.approx import ApproxSpaceReport, ApproxState, ProductApproximator
from probstream.automata.noisy import NoisyAutomaton, NoisyState
from probstream.automata.threshold import (
    PrimeExponentVector,
    ThresholdAutomaton,
    ThresholdSpaceReport,
    ThresholdState,
    factor_over_primes,
)
from probstream.automata.window import NaiveWindow, WindowApproximator, WindowParams, WindowSpaceReport, WindowState
