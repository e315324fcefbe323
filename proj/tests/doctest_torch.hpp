// The torch headers pull in glog-style CHECK/CHECK_EQ/... macros which would
// shadow doctest's assertion macros. Include torch first, drop those macros,
// then let doctest define its own.
#pragma once

#include <torch/torch.h>

#ifdef CHECK
#undef CHECK
#endif
#ifdef CHECK_OP
#undef CHECK_OP
#endif
#ifdef CHECK_EQ
#undef CHECK_EQ
#endif
#ifdef CHECK_NE
#undef CHECK_NE
#endif
#ifdef CHECK_LE
#undef CHECK_LE
#endif
#ifdef CHECK_LT
#undef CHECK_LT
#endif
#ifdef CHECK_GE
#undef CHECK_GE
#endif
#ifdef CHECK_GT
#undef CHECK_GT
#endif
#ifdef CHECK_NOTNULL
#undef CHECK_NOTNULL
#endif
#ifdef DCHECK
#undef DCHECK
#endif
#ifdef DCHECK_EQ
#undef DCHECK_EQ
#endif
#ifdef DCHECK_NE
#undef DCHECK_NE
#endif
#ifdef DCHECK_LE
#undef DCHECK_LE
#endif
#ifdef DCHECK_LT
#undef DCHECK_LT
#endif
#ifdef DCHECK_GE
#undef DCHECK_GE
#endif
#ifdef DCHECK_GT
#undef DCHECK_GT
#endif
#ifdef DCHECK_NOTNULL
#undef DCHECK_NOTNULL
#endif

#include <doctest.h>
