#ifndef BSKPD_BSKPD_HPP
#define BSKPD_BSKPD_HPP

#include "bskpd/distributions.hpp"
#include "bskpd/error.hpp"
#include "bskpd/evaluate.hpp"
#include "bskpd/geweke.hpp"
#include "bskpd/gibbs.hpp"
#include "bskpd/io.hpp"
#include "bskpd/model.hpp"
#include "bskpd/random.hpp"
#include "bskpd/selftest.hpp"
#include "bskpd/simulate.hpp"
#include "bskpd/tensor.hpp"

#endif  // BSKPD_BSKPD_HPP
