#pragma once
#include <geetgdr/assoc.hpp>
#include <geetgdr/correlation.hpp>
#include <geetgdr/dataset.hpp>
#include <geetgdr/gee_tgdr.hpp>
#include <geetgdr/io.hpp>
#include <geetgdr/model_select.hpp>
#include <geetgdr/selection.hpp>
#include <geetgdr/simulate.hpp>
#include <geetgdr/tgdr.hpp>
#include <geetgdr/types.hpp>
#include <geetgdr/version.hpp>
