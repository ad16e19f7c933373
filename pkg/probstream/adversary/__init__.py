from probstream.adversary.bucket_streams import (
    BucketFoolingConfig,
    choose_k,
    fooling_set_bits,
    gen_app_fooling_streams,
    gen_bucket_stream,
)
from probstream.adversary.prime_family import (
    FoolingVerdict,
    PrimeFoolingFamily,
    family_suffix,
    family_word,
    fooling_check,
    gen_prime_family,
    sample_word,
)
