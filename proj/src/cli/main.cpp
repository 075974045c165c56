#include <cstdio>
#include <exception>

#include "mcx/common.hpp"

#include "commands.hpp"

int main(int argc, char** argv) {
  try {
    return mcx::run_cli(argc, argv);
  } catch (const mcx::ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const mcx::ResourceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const mcx::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s (worst value %.6g)\n", e.what(),
                 e.worst_value);
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
