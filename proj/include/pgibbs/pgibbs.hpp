#ifndef PGIBBS_PGIBBS_HPP
#define PGIBBS_PGIBBS_HPP

#include "pgibbs/coupling.hpp"
#include "pgibbs/cpf.hpp"
#include "pgibbs/csv.hpp"
#include "pgibbs/diagnostics.hpp"
#include "pgibbs/error.hpp"
#include "pgibbs/finite_hmm.hpp"
#include "pgibbs/gibbs.hpp"
#include "pgibbs/model.hpp"
#include "pgibbs/oracle.hpp"
#include "pgibbs/poisson_ar1.hpp"
#include "pgibbs/random.hpp"
#include "pgibbs/resampling.hpp"
#include "pgibbs/smc.hpp"

#endif  // PGIBBS_PGIBBS_HPP
